#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace calderon::detail {

namespace {

struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> nb;  // nb[i] lies across the edge opposite v[i]
    bool alive = true;
};

long double incircle(const Point& a, const Point& b, const Point& c, const Point& d) {
    const long double adx = a.x - d.x, ady = a.y - d.y;
    const long double bdx = b.x - d.x, bdy = b.y - d.y;
    const long double cdx = c.x - d.x, cdy = c.y - d.y;
    const long double ad = adx * adx + ady * ady;
    const long double bd = bdx * bdx + bdy * bdy;
    const long double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

class Triangulator {
public:
    explicit Triangulator(const std::vector<Point>& input) : pts_(input) {
        double xmin = pts_[0].x, xmax = xmin, ymin = pts_[0].y, ymax = ymin;
        for (const auto& p : pts_) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
        const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
        const double big = 64.0 * span;
        super_ = static_cast<int>(pts_.size());
        pts_.push_back({cx - big, cy - big});
        pts_.push_back({cx + big, cy - big});
        pts_.push_back({cx, cy + big});
        tris_.push_back({{super_, super_ + 1, super_ + 2}, {-1, -1, -1}, true});
    }

    void insert(int p) {
        const int start = locate(pts_[p]);
        cavity_.clear();
        cavity_.push_back(start);
        mark_[start] = stamp_;
        for (std::size_t k = 0; k < cavity_.size(); ++k) {
            const Tri& t = tris_[cavity_[k]];
            for (int nb : t.nb) {
                if (nb < 0 || mark_[nb] == stamp_) continue;
                const Tri& u = tris_[nb];
                if (incircle(pts_[u.v[0]], pts_[u.v[1]], pts_[u.v[2]], pts_[p]) > 0) {
                    mark_[nb] = stamp_;
                    cavity_.push_back(nb);
                }
            }
        }

        struct Edge {
            int a, b, outside;
        };
        std::vector<Edge> rim;
        for (int c : cavity_) {
            const Tri& t = tris_[c];
            for (int i = 0; i < 3; ++i) {
                const int nb = t.nb[i];
                if (nb >= 0 && mark_[nb] == stamp_) continue;
                rim.push_back({t.v[(i + 1) % 3], t.v[(i + 2) % 3], nb});
            }
        }
        for (int c : cavity_) {
            tris_[c].alive = false;
            free_.push_back(c);
        }

        std::unordered_map<int, int> starting_at, ending_at;
        std::vector<int> created;
        created.reserve(rim.size());
        for (const Edge& e : rim) {
            const int id = allocate();
            tris_[id] = Tri{{e.a, e.b, p}, {-1, -1, e.outside}, true};
            if (e.outside >= 0) {
                Tri& o = tris_[e.outside];
                for (int i = 0; i < 3; ++i) {
                    const int oa = o.v[(i + 1) % 3], ob = o.v[(i + 2) % 3];
                    if (oa == e.b && ob == e.a) o.nb[i] = id;
                }
            }
            starting_at[e.a] = id;
            ending_at[e.b] = id;
            created.push_back(id);
        }
        for (int id : created) {
            Tri& t = tris_[id];
            t.nb[0] = starting_at.at(t.v[1]);
            t.nb[1] = ending_at.at(t.v[0]);
        }
        last_ = created.front();
        ++stamp_;
    }

    std::vector<std::array<int, 3>> finish() const {
        std::vector<std::array<int, 3>> out;
        for (const Tri& t : tris_) {
            if (!t.alive) continue;
            if (t.v[0] >= super_ || t.v[1] >= super_ || t.v[2] >= super_) continue;
            out.push_back(t.v);
        }
        return out;
    }

private:
    int allocate() {
        if (!free_.empty()) {
            const int id = free_.back();
            free_.pop_back();
            return id;
        }
        tris_.emplace_back();
        mark_.push_back(0);
        return static_cast<int>(tris_.size()) - 1;
    }

    int locate(const Point& p) {
        int t = last_;
        if (t < 0 || !tris_[t].alive) {
            t = 0;
            while (!tris_[t].alive) ++t;
        }
        mark_.resize(tris_.size(), 0);
        for (std::size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
            const Tri& tri = tris_[t];
            int next = -1;
            for (int i = 0; i < 3; ++i) {
                const Point& a = pts_[tri.v[(i + 1) % 3]];
                const Point& b = pts_[tri.v[(i + 2) % 3]];
                if (orient2d(a, b, p) < 0 && tri.nb[i] >= 0) {
                    next = tri.nb[i];
                    break;
                }
            }
            if (next < 0) return t;
            t = next;
        }
        throw std::runtime_error("delaunay: point location did not terminate");
    }

    std::vector<Point> pts_;
    std::vector<Tri> tris_;
    std::vector<int> free_;
    std::vector<int> cavity_;
    std::vector<unsigned> mark_ = std::vector<unsigned>(1, 0);
    unsigned stamp_ = 1;
    int super_ = 0;
    int last_ = 0;
};

}  // namespace

double orient2d(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

std::vector<std::array<int, 3>> delaunay(const std::vector<Point>& points) {
    if (points.size() < 3) throw std::invalid_argument("delaunay: need at least three points");

    // Insert along a snake ordering of coarse cells so the walk stays short.
    double xmin = points[0].x, ymin = points[0].y, xmax = xmin, ymax = ymin;
    for (const auto& p : points) {
        xmin = std::min(xmin, p.x);
        ymin = std::min(ymin, p.y);
        xmax = std::max(xmax, p.x);
        ymax = std::max(ymax, p.y);
    }
    const auto cells = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(points.size() / 4.0)));
    const double cw = std::max(xmax - xmin, 1e-300) / static_cast<double>(cells);
    const double ch = std::max(ymax - ymin, 1e-300) / static_cast<double>(cells);
    auto key = [&](const Point& p) {
        auto row = std::min(cells - 1, static_cast<std::size_t>((p.y - ymin) / ch));
        auto col = std::min(cells - 1, static_cast<std::size_t>((p.x - xmin) / cw));
        if (row % 2 == 1) col = cells - 1 - col;
        return row * cells + col;
    };
    std::vector<int> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return key(points[a]) < key(points[b]); });

    Triangulator tr(points);
    for (int p : order) tr.insert(p);
    return tr.finish();
}

}  // namespace calderon::detail
