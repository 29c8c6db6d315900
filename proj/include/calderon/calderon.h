#ifndef CALDERON_H
#define CALDERON_H

#include <stddef.h>

#if defined(_WIN32)
#define CAL_API __declspec(dllexport)
#else
#define CAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    CAL_OK = 0,
    CAL_ERR_INVALID_ARGUMENT = 1,
    CAL_ERR_NUMERICAL = 2,
    CAL_ERR_NON_COERCIVE = 3,
    CAL_ERR_IO = 4,
    CAL_ERR_INTERNAL = 5
} cal_status;

typedef struct cal_mesh cal_mesh;
typedef struct cal_partition cal_partition;
typedef struct cal_backend cal_backend;
typedef struct cal_result cal_result;

CAL_API const char* cal_version(void);
/* Message of the last failing call on this thread ("" if none). */
CAL_API const char* cal_last_error(void);

/* Meshes. Constraint k has constraint_sizes[k] vertices, read consecutively
 * from constraint_xy as x0 y0 x1 y1 ... */
CAL_API cal_status cal_mesh_disk(double radius, double h, int degree, const double* constraint_xy,
                                 const int* constraint_sizes, int n_constraints, cal_mesh** out);
CAL_API cal_status cal_mesh_read(const char* path, cal_mesh** out);
CAL_API cal_status cal_mesh_write(const cal_mesh* mesh, const char* path);
CAL_API cal_status cal_mesh_info(const cal_mesh* mesh, size_t* triangles, size_t* dofs, double* max_edge);
CAL_API void cal_mesh_free(cal_mesh* mesh);

CAL_API cal_status cal_partition_pixels(const cal_mesh* mesh, double inner_radius, int target_pixels, int split_regions,
                                        cal_partition** out);
CAL_API cal_status cal_partition_concentric(const cal_mesh* mesh, double rho, cal_partition** out);
CAL_API cal_status cal_partition_size(const cal_partition* partition, int* pixels);
CAL_API void cal_partition_free(cal_partition* partition);

/* Forward models. coefficient holds one value per mesh triangle; NULL means 1. */
CAL_API cal_status cal_backend_fem(const cal_mesh* mesh, const double* coefficient, int J, const cal_partition* partition,
                                   cal_backend** out);
/* m electrodes: arcs holds start/end angle pairs, z the contact impedances. */
CAL_API cal_status cal_backend_scem(const cal_mesh* mesh, const double* coefficient, int m, const double* arcs,
                                    const double* z, const cal_partition* partition, cal_backend** out);
/* Concentric disk oracle on the listed frequencies; parameters (kappa1, kappa2). */
CAL_API cal_status cal_backend_analytic(double rho, const int* span, int n_span, cal_backend** out);
/* measurements: J (or m-1, or the span size); parameters: N. */
CAL_API cal_status cal_backend_dims(const cal_backend* backend, int* measurements, int* parameters);
/* Column-major output buffers of measurements^2 entries. */
CAL_API cal_status cal_backend_nd_matrix(const cal_backend* backend, double* re, double* im);
/* measurements^2 x parameters, column-major. */
CAL_API cal_status cal_backend_derivative(const cal_backend* backend, double* re, double* im);
CAL_API void cal_backend_free(cal_backend* backend);

/* Series reversion from the difference datum (measurements^2, column-major). */
CAL_API cal_status cal_reconstruct(const cal_backend* backend, const double* diff_re, const double* diff_im, int K,
                                   double alpha, double beta, int relative_threshold, int experimental, cal_result** out);
CAL_API cal_status cal_result_dims(const cal_result* result, int* orders, int* parameters);
/* order is 1-based; buffers hold `parameters` entries. */
CAL_API cal_status cal_result_term(const cal_result* result, int order, double* re, double* im);
CAL_API cal_status cal_result_partial_sum(const cal_result* result, int order, double* re, double* im);
CAL_API cal_status cal_result_write(const cal_result* result, const char* directory);
CAL_API void cal_result_free(cal_result* result);

CAL_API cal_status cal_nd_eigenvalue(double kappa1, double kappa2, double rho, int j, double* out);

/* Runs a command described by a JSON descriptor. The report is allocated by
 * the library and must be released with cal_string_free. exit_code follows
 * the CLI convention: 0 ok, 1 numerical failure, 2 usage error. */
CAL_API cal_status cal_run(const char* descriptor_json, char** report, int* exit_code);
CAL_API void cal_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
