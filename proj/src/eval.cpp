#include "gstrim/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

namespace gstrim {

PointCloud voxel_downsample(const PointCloud& points, double voxel_size) {
    if (voxel_size <= 0.0) throw std::invalid_argument("voxel_downsample: voxel_size must be > 0");
    if (points.empty()) return {};

    Vec3 mn = points[0];
    for (const Vec3& p : points) {
        mn.x = std::fmin(mn.x, p.x);
        mn.y = std::fmin(mn.y, p.y);
        mn.z = std::fmin(mn.z, p.z);
    }
    const Vec3 anchor{std::floor(mn.x), std::floor(mn.y), std::floor(mn.z)};

    using Key = std::tuple<long long, long long, long long>;
    struct Best {
        double dist2;
        std::size_t index;
    };
    std::map<Key, Best> kept;  // ordered: voxel lexicographic order for free
    const double inv = 1.0 / voxel_size;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3& p = points[i];
        Key key{static_cast<long long>(std::floor((p.x - anchor.x) * inv)),
                static_cast<long long>(std::floor((p.y - anchor.y) * inv)),
                static_cast<long long>(std::floor((p.z - anchor.z) * inv))};
        Vec3 center{anchor.x + (std::get<0>(key) + 0.5) * voxel_size,
                    anchor.y + (std::get<1>(key) + 0.5) * voxel_size,
                    anchor.z + (std::get<2>(key) + 0.5) * voxel_size};
        double d2 = norm2(p - center);
        auto it = kept.find(key);
        if (it == kept.end())
            kept.emplace(key, Best{d2, i});
        else if (d2 < it->second.dist2)
            it->second = {d2, i};
    }

    PointCloud out;
    out.reserve(kept.size());
    for (const auto& [key, best] : kept) out.push_back(points[best.index]);
    return out;
}

namespace {

// Uniform grid over the target cloud for exact nearest-neighbor queries.
class NearestGrid {
public:
    explicit NearestGrid(const PointCloud& pts) : pts_(pts) {
        mn_ = mx_ = pts[0];
        for (const Vec3& p : pts) {
            mn_.x = std::fmin(mn_.x, p.x); mx_.x = std::fmax(mx_.x, p.x);
            mn_.y = std::fmin(mn_.y, p.y); mx_.y = std::fmax(mx_.y, p.y);
            mn_.z = std::fmin(mn_.z, p.z); mx_.z = std::fmax(mx_.z, p.z);
        }
        Vec3 ext = mx_ - mn_;
        double diag = norm(ext);
        double target = diag > 0.0 ? diag / std::cbrt(static_cast<double>(pts.size())) : 1.0;
        h_ = std::fmax(target, 1e-12);
        nx_ = cell_count(ext.x); ny_ = cell_count(ext.y); nz_ = cell_count(ext.z);
        cells_.resize(static_cast<std::size_t>(nx_) * ny_ * nz_);
        for (std::size_t i = 0; i < pts.size(); ++i)
            cells_[cell_index(clampi(coord(pts[i].x, mn_.x), nx_), clampi(coord(pts[i].y, mn_.y), ny_),
                              clampi(coord(pts[i].z, mn_.z), nz_))]
                .push_back(i);
    }

    double nearest_dist(const Vec3& q) const {
        int cx = clampi(coord(q.x, mn_.x), nx_);
        int cy = clampi(coord(q.y, mn_.y), ny_);
        int cz = clampi(coord(q.z, mn_.z), nz_);
        double best2 = std::numeric_limits<double>::infinity();
        int max_ring = std::max({nx_, ny_, nz_});
        for (int ring = 0; ring <= max_ring; ++ring) {
            if (std::isfinite(best2) && ring_lower_bound(q, cx, cy, cz, ring) > std::sqrt(best2))
                break;
            scan_ring(q, cx, cy, cz, ring, best2);
        }
        return std::sqrt(best2);
    }

private:
    static int clampi(int v, int n) { return std::clamp(v, 0, n - 1); }
    int cell_count(double extent) const {
        return std::max(1, static_cast<int>(extent / h_) + 1);
    }
    int coord(double v, double lo) const { return static_cast<int>((v - lo) / h_); }
    std::size_t cell_index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * ny_ + y) * nx_ + x;
    }

    // Any cell on Chebyshev ring `ring` has some axis index offset +-ring from
    // the anchor cell; the reachable gap along that axis bounds the distance
    // from below.
    double ring_lower_bound(const Vec3& q, int cx, int cy, int cz, int ring) const {
        if (ring == 0) return 0.0;
        double lb = std::numeric_limits<double>::infinity();
        auto axis_gap = [&](double qa, double lo, int c, int n) {
            double gap_hi = lo + (c + ring) * h_ - qa;       // entering cell c+ring from below
            double gap_lo = qa - (lo + (c - ring + 1) * h_); // entering cell c-ring from above
            if (c + ring <= n - 1) lb = std::fmin(lb, std::fmax(gap_hi, 0.0));
            if (c - ring >= 0) lb = std::fmin(lb, std::fmax(gap_lo, 0.0));
        };
        axis_gap(q.x, mn_.x, cx, nx_);
        axis_gap(q.y, mn_.y, cy, ny_);
        axis_gap(q.z, mn_.z, cz, nz_);
        return lb;
    }

    void scan_ring(const Vec3& q, int cx, int cy, int cz, int ring, double& best2) const {
        int x0 = std::max(cx - ring, 0), x1 = std::min(cx + ring, nx_ - 1);
        int y0 = std::max(cy - ring, 0), y1 = std::min(cy + ring, ny_ - 1);
        int z0 = std::max(cz - ring, 0), z1 = std::min(cz + ring, nz_ - 1);
        for (int z = z0; z <= z1; ++z) {
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    int cheb = std::max({std::abs(x - cx), std::abs(y - cy), std::abs(z - cz)});
                    if (cheb != ring) continue;
                    for (std::size_t i : cells_[cell_index(x, y, z)])
                        best2 = std::fmin(best2, norm2(pts_[i] - q));
                }
            }
        }
    }

    const PointCloud& pts_;
    Vec3 mn_, mx_;
    double h_ = 1.0;
    int nx_ = 1, ny_ = 1, nz_ = 1;
    std::vector<std::vector<std::size_t>> cells_;
};

double directional_mean(const PointCloud& from, const NearestGrid& to) {
    // Distances land in per-query slots; the final sum runs in index order so
    // the result does not depend on the thread count.
    std::vector<double> dist(from.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(from.size()); ++i)
        dist[i] = to.nearest_dist(from[i]);
    double sum = 0.0;
    for (double d : dist) sum += d;
    return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer_distance: empty cloud");
    NearestGrid ga(a), gb(b);
    return 0.5 * (directional_mean(a, gb) + directional_mean(b, ga));
}

double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw std::invalid_argument("psnr: shape mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

}  // namespace gstrim
