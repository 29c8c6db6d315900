#include "calderon/calderon.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "calderon/analytic_disk.hpp"
#include "calderon/backends.hpp"
#include "calderon/errors.hpp"
#include "calderon/experiments.hpp"

struct cal_mesh {
    calderon::MeshPtr mesh;
};
struct cal_partition {
    calderon::PartitionPtr partition;
};
struct cal_backend {
    std::unique_ptr<calderon::ForwardBackend> backend;
};
struct cal_result {
    calderon::ReversionResult result;
    calderon::ReversionConfig config;
};

namespace {

thread_local std::string last_error;

// Runs f and turns exceptions into status codes.
template <class F>
cal_status guarded(F&& f) {
    try {
        last_error.clear();
        f();
        return CAL_OK;
    } catch (const std::invalid_argument& e) {
        last_error = e.what();
        return CAL_ERR_INVALID_ARGUMENT;
    } catch (const calderon::NonCoerciveError& e) {
        last_error = e.what();
        return CAL_ERR_NON_COERCIVE;
    } catch (const calderon::NumericalError& e) {
        last_error = e.what();
        return CAL_ERR_NUMERICAL;
    } catch (const std::ios_base::failure& e) {
        last_error = e.what();
        return CAL_ERR_IO;
    } catch (const std::filesystem::filesystem_error& e) {
        last_error = e.what();
        return CAL_ERR_IO;
    } catch (const std::exception& e) {
        last_error = e.what();
        return CAL_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return CAL_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

std::vector<double> coefficients(const calderon::Mesh& mesh, const double* c) {
    if (!c) return std::vector<double>(mesh.num_triangles(), 1.0);
    return std::vector<double>(c, c + mesh.num_triangles());
}

void split(const Eigen::MatrixXcd& m, double* re, double* im) {
    require(re && im, "output buffers must not be null");
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        re[k] = m.data()[k].real();
        im[k] = m.data()[k].imag();
    }
}

}  // namespace

extern "C" {

const char* cal_version(void) { return calderon::kLibraryVersion; }

const char* cal_last_error(void) { return last_error.c_str(); }

cal_status cal_mesh_disk(double radius, double h, int degree, const double* constraint_xy, const int* constraint_sizes,
                         int n_constraints, cal_mesh** out) {
    return guarded([&] {
        require(out, "out must not be null");
        require(n_constraints == 0 || (constraint_xy && constraint_sizes), "constraint arrays must not be null");
        std::vector<calderon::Constraint> cs(std::max(n_constraints, 0));
        const double* p = constraint_xy;
        for (int k = 0; k < n_constraints; ++k)
            for (int i = 0; i < constraint_sizes[k]; ++i, p += 2) cs[k].vertices.push_back({p[0], p[1]});
        *out = new cal_mesh{calderon::generate_disk_mesh(radius, h, degree, cs)};
    });
}

cal_status cal_mesh_read(const char* path, cal_mesh** out) {
    return guarded([&] {
        require(path && out, "arguments must not be null");
        std::ifstream is(path);
        if (!is) throw std::ios_base::failure(std::string("cannot read ") + path);
        *out = new cal_mesh{calderon::read_mesh(is)};
    });
}

cal_status cal_mesh_write(const cal_mesh* mesh, const char* path) {
    return guarded([&] {
        require(mesh && path, "arguments must not be null");
        std::ofstream os(path);
        if (!os) throw std::ios_base::failure(std::string("cannot write ") + path);
        calderon::write_mesh(os, *mesh->mesh);
    });
}

cal_status cal_mesh_info(const cal_mesh* mesh, size_t* triangles, size_t* dofs, double* max_edge) {
    return guarded([&] {
        require(mesh, "mesh must not be null");
        if (triangles) *triangles = mesh->mesh->num_triangles();
        if (dofs) *dofs = mesh->mesh->num_dofs();
        if (max_edge) *max_edge = mesh->mesh->max_edge_length();
    });
}

void cal_mesh_free(cal_mesh* mesh) { delete mesh; }

cal_status cal_partition_pixels(const cal_mesh* mesh, double inner_radius, int target_pixels, int split_regions,
                                cal_partition** out) {
    return guarded([&] {
        require(mesh && out, "arguments must not be null");
        *out = new cal_partition{calderon::build_pixel_partition(mesh->mesh, inner_radius, target_pixels, split_regions)};
    });
}

cal_status cal_partition_concentric(const cal_mesh* mesh, double rho, cal_partition** out) {
    return guarded([&] {
        require(mesh && out, "arguments must not be null");
        *out = new cal_partition{calderon::concentric_partition(mesh->mesh, rho)};
    });
}

cal_status cal_partition_size(const cal_partition* partition, int* pixels) {
    return guarded([&] {
        require(partition && pixels, "arguments must not be null");
        *pixels = partition->partition->size();
    });
}

void cal_partition_free(cal_partition* partition) { delete partition; }

cal_status cal_backend_fem(const cal_mesh* mesh, const double* coefficient, int J, const cal_partition* partition,
                           cal_backend** out) {
    return guarded([&] {
        require(mesh && partition && out, "arguments must not be null");
        require(&partition->partition->mesh() == mesh->mesh.get(), "partition belongs to a different mesh");
        auto space = std::make_shared<const calderon::FeSpace>(mesh->mesh);
        auto sys = calderon::assemble_system(space, coefficients(*mesh->mesh, coefficient));
        *out = new cal_backend{std::make_unique<calderon::FemBackend>(
            sys, calderon::BoundaryBasis::trigonometric(*space, J), partition->partition)};
    });
}

cal_status cal_backend_scem(const cal_mesh* mesh, const double* coefficient, int m, const double* arcs,
                            const double* z, const cal_partition* partition, cal_backend** out) {
    return guarded([&] {
        require(mesh && partition && out && arcs && z, "arguments must not be null");
        require(&partition->partition->mesh() == mesh->mesh.get(), "partition belongs to a different mesh");
        calderon::ElectrodeLayout layout;
        for (int k = 0; k < m; ++k) {
            layout.arcs.emplace_back(arcs[2 * k], arcs[2 * k + 1]);
            layout.z.push_back(z[k]);
        }
        auto space = std::make_shared<const calderon::FeSpace>(mesh->mesh);
        auto sys = calderon::assemble_scem(space, coefficients(*mesh->mesh, coefficient), layout);
        *out = new cal_backend{std::make_unique<calderon::ScemBackend>(sys, partition->partition)};
    });
}

cal_status cal_backend_analytic(double rho, const int* span, int n_span, cal_backend** out) {
    return guarded([&] {
        require(span && out && n_span > 0, "span must be non-empty");
        *out = new cal_backend{
            std::make_unique<calderon::disk::SpectralBackend>(rho, std::vector<int>(span, span + n_span))};
    });
}

cal_status cal_backend_dims(const cal_backend* backend, int* measurements, int* parameters) {
    return guarded([&] {
        require(backend, "backend must not be null");
        if (measurements) *measurements = backend->backend->measurement_dim();
        if (parameters) *parameters = backend->backend->parameter_dim();
    });
}

cal_status cal_backend_nd_matrix(const cal_backend* backend, double* re, double* im) {
    return guarded([&] {
        require(backend, "backend must not be null");
        split(backend->backend->nd_matrix(), re, im);
    });
}

cal_status cal_backend_derivative(const cal_backend* backend, double* re, double* im) {
    return guarded([&] {
        require(backend, "backend must not be null");
        split(backend->backend->derivative_matrix(), re, im);
    });
}

void cal_backend_free(cal_backend* backend) { delete backend; }

cal_status cal_reconstruct(const cal_backend* backend, const double* diff_re, const double* diff_im, int K,
                           double alpha, double beta, int relative_threshold, int experimental, cal_result** out) {
    return guarded([&] {
        require(backend && diff_re && out, "arguments must not be null");
        const int J = backend->backend->measurement_dim();
        Eigen::MatrixXcd diff(J, J);
        for (Eigen::Index k = 0; k < diff.size(); ++k) diff.data()[k] = {diff_re[k], diff_im ? diff_im[k] : 0.0};
        calderon::ReversionConfig cfg;
        cfg.K = K;
        cfg.alpha = alpha;
        cfg.beta = beta;
        cfg.relative_threshold = relative_threshold != 0;
        cfg.experimental_general_recursion = experimental != 0;
        cfg.validate();
        *out = new cal_result{calderon::reconstruct(*backend->backend, diff, cfg), cfg};
    });
}

cal_status cal_result_dims(const cal_result* result, int* orders, int* parameters) {
    return guarded([&] {
        require(result, "result must not be null");
        if (orders) *orders = static_cast<int>(result->result.terms.size());
        if (parameters) *parameters = result->result.terms.empty() ? 0 : static_cast<int>(result->result.terms[0].size());
    });
}

cal_status cal_result_term(const cal_result* result, int order, double* re, double* im) {
    return guarded([&] {
        require(result, "result must not be null");
        require(order >= 1 && order <= static_cast<int>(result->result.terms.size()), "order out of range");
        split(result->result.terms[order - 1], re, im);
    });
}

cal_status cal_result_partial_sum(const cal_result* result, int order, double* re, double* im) {
    return guarded([&] {
        require(result, "result must not be null");
        require(order >= 1 && order <= static_cast<int>(result->result.partial_sums.size()), "order out of range");
        split(result->result.partial_sums[order - 1], re, im);
    });
}

cal_status cal_result_write(const cal_result* result, const char* directory) {
    return guarded([&] {
        require(result && directory, "arguments must not be null");
        calderon::write_result(directory, result->result, result->config);
    });
}

void cal_result_free(cal_result* result) { delete result; }

cal_status cal_nd_eigenvalue(double kappa1, double kappa2, double rho, int j, double* out) {
    return guarded([&] {
        require(out, "out must not be null");
        *out = calderon::disk::nd_eigenvalue({kappa1, kappa2, rho}, j);
    });
}

cal_status cal_run(const char* descriptor_json, char** report, int* exit_code) {
    return guarded([&] {
        require(descriptor_json && report && exit_code, "arguments must not be null");
        *report = nullptr;
        calderon::RunReport r;
        try {
            r = calderon::run(calderon::parse_descriptor(descriptor_json));
        } catch (const std::exception& e) {
            r = {2, std::string("usage error: ") + e.what() + "\n"};
        }
        *exit_code = r.exit_code;
        *report = static_cast<char*>(std::malloc(r.message.size() + 1));
        if (!*report) throw std::bad_alloc();
        std::memcpy(*report, r.message.c_str(), r.message.size() + 1);
    });
}

void cal_string_free(char* s) { std::free(s); }

}  // extern "C"
