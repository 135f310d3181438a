#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "hyperangle/empirical.hpp"
#include "hyperangle/errors.hpp"
#include "hyperangle/geometry.hpp"

namespace hyperangle {

namespace {

constexpr double kPi = std::numbers::pi;
// Slack on cell/prune geometry only; membership always uses the exact predicate.
constexpr double kMargin = 1e-9;

struct CapNode {
    std::size_t begin, end;
    std::int32_t left = -1, right = -1;
    double radius = 0.0;
    std::size_t center = 0;  // offset into centers
};

}  // namespace

struct NeighborIndex::Impl {
    int n;
    double max_radius;
    Kind kind;
    std::vector<double> dirs;
    std::vector<std::uint32_t> ids;

    // circle
    std::vector<double> phi;

    // grid
    double h = 0.0;
    int bands = 0;
    std::vector<int> cells_in_band;
    std::vector<std::size_t> band_offset;  // first cell of each band
    std::vector<std::size_t> cell_start;   // CSR over all cells

    // cap tree
    std::vector<CapNode> nodes;
    std::vector<double> centers;

    void check(const double* q, double radius, std::size_t j,
               std::vector<std::pair<std::uint32_t, double>>& out) const {
        const double a = vector_angle(q, dirs.data() + j * n, n);
        if (a < radius) out.emplace_back(ids[j], a);
    }

    void permute(const std::vector<std::size_t>& order) {
        std::vector<double> d(dirs.size());
        std::vector<std::uint32_t> id(ids.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            std::copy_n(dirs.data() + order[i] * n, n, d.data() + i * n);
            id[i] = ids[order[i]];
        }
        dirs.swap(d);
        ids.swap(id);
    }

    static double colatitude(const double* d) { return std::atan2(std::hypot(d[0], d[1]), d[2]); }

    void build_circle() {
        const std::size_t N = ids.size();
        std::vector<double> p(N);
        for (std::size_t i = 0; i < N; ++i) p[i] = std::atan2(dirs[i * 2 + 1], dirs[i * 2]);
        std::vector<std::size_t> order(N);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
        permute(order);
        phi.resize(N);
        for (std::size_t i = 0; i < N; ++i) phi[i] = p[order[i]];
    }

    int cell_of(int band, double ph) const {
        const int m = cells_in_band[band];
        const int c = static_cast<int>(std::floor((ph + kPi) / (2 * kPi) * m));
        return std::clamp(c, 0, m - 1);
    }

    void build_grid() {
        const std::size_t N = ids.size();
        h = std::min(kPi, std::max(2.0 * max_radius, std::sqrt(16.0 * kPi / std::max<std::size_t>(N, 1))));
        bands = std::max(1, static_cast<int>(std::ceil(kPi / h)));
        cells_in_band.resize(bands);
        band_offset.resize(bands + 1, 0);
        for (int b = 0; b < bands; ++b) {
            const double lo = b * h, hi = std::min(kPi, (b + 1) * h);
            const double widest = (lo <= kPi / 2 && hi >= kPi / 2) ? 1.0 : std::max(std::sin(lo), std::sin(hi));
            cells_in_band[b] = std::max(1, static_cast<int>(std::floor(2 * kPi * widest / h)));
            band_offset[b + 1] = band_offset[b] + cells_in_band[b];
        }
        std::vector<std::size_t> cell(N);
        for (std::size_t i = 0; i < N; ++i) {
            const double* d = dirs.data() + i * 3;
            const int b = std::min(bands - 1, static_cast<int>(colatitude(d) / h));
            cell[i] = band_offset[b] + cell_of(b, std::atan2(d[1], d[0]));
        }
        std::vector<std::size_t> order(N);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return cell[a] < cell[b]; });
        permute(order);
        cell_start.assign(band_offset[bands] + 1, 0);
        for (std::size_t c : cell) ++cell_start[c + 1];
        for (std::size_t c = 0; c + 1 < cell_start.size(); ++c) cell_start[c + 1] += cell_start[c];
    }

    std::int32_t build_node(std::size_t b, std::size_t e) {
        CapNode node{b, e};
        std::vector<double> c(n, 0.0);
        for (std::size_t i = b; i < e; ++i)
            for (int j = 0; j < n; ++j) c[j] += dirs[i * n + j];
        double norm = 0.0;
        for (double v : c) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-9) std::copy_n(dirs.data() + b * n, n, c.data());
        else
            for (double& v : c) v /= norm;
        for (std::size_t i = b; i < e; ++i)
            node.radius = std::max(node.radius, vector_angle(c.data(), dirs.data() + i * n, n));
        node.center = centers.size();
        centers.insert(centers.end(), c.begin(), c.end());
        const auto id = static_cast<std::int32_t>(nodes.size());
        nodes.push_back(node);
        if (e - b <= 16) return id;
        // split at the median of the coordinate with the largest spread
        int axis = 0;
        double best = -1.0;
        for (int j = 0; j < n; ++j) {
            double lo = 2.0, hi = -2.0;
            for (std::size_t i = b; i < e; ++i) {
                lo = std::min(lo, dirs[i * n + j]);
                hi = std::max(hi, dirs[i * n + j]);
            }
            if (hi - lo > best) {
                best = hi - lo;
                axis = j;
            }
        }
        std::vector<std::size_t> order(e - b);
        std::iota(order.begin(), order.end(), b);
        const std::size_t mid = (e - b) / 2;
        std::nth_element(order.begin(), order.begin() + mid, order.end(), [&](auto x, auto y) {
            const double vx = dirs[x * n + axis], vy = dirs[y * n + axis];
            return vx != vy ? vx < vy : x < y;
        });
        std::vector<double> d(order.size() * n);
        std::vector<std::uint32_t> idv(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            std::copy_n(dirs.data() + order[i] * n, n, d.data() + i * n);
            idv[i] = ids[order[i]];
        }
        std::copy(d.begin(), d.end(), dirs.begin() + b * n);
        std::copy(idv.begin(), idv.end(), ids.begin() + b);
        const std::int32_t l = build_node(b, b + mid);
        const std::int32_t r = build_node(b + mid, e);
        nodes[id].left = l;
        nodes[id].right = r;
        return id;
    }
};

NeighborIndex::NeighborIndex(std::vector<double> dirs, std::vector<std::uint32_t> ids, int n,
                             double max_radius, std::optional<Kind> kind)
    : impl_(std::make_unique<Impl>()) {
    if (n < 2) throw UsageError("neighbor index needs n >= 2");
    if (dirs.size() != ids.size() * n) throw UsageError("direction array does not match ids");
    if (!(max_radius >= 0.0)) throw UsageError("max radius must be nonnegative");
    impl_->n = n;
    impl_->max_radius = max_radius;
    impl_->dirs = std::move(dirs);
    impl_->ids = std::move(ids);
    impl_->kind = kind.value_or(n == 2 ? Kind::circle : (n == 3 ? Kind::grid : Kind::cap_tree));
    if (impl_->kind == Kind::circle && n != 2) throw UsageError("circle index is for n = 2");
    if (impl_->kind == Kind::grid && n != 3) throw UsageError("grid index is for n = 3");
    switch (impl_->kind) {
        case Kind::circle:
            impl_->build_circle();
            break;
        case Kind::grid:
            impl_->build_grid();
            break;
        case Kind::cap_tree:
            if (!impl_->ids.empty()) impl_->build_node(0, impl_->ids.size());
            break;
    }
}

NeighborIndex::~NeighborIndex() = default;
NeighborIndex::NeighborIndex(NeighborIndex&&) noexcept = default;
NeighborIndex& NeighborIndex::operator=(NeighborIndex&&) noexcept = default;

NeighborIndex::Kind NeighborIndex::kind() const { return impl_->kind; }
double NeighborIndex::max_radius() const { return impl_->max_radius; }
std::size_t NeighborIndex::size() const { return impl_->ids.size(); }

void NeighborIndex::query(const double* q, double radius,
                          std::vector<std::pair<std::uint32_t, double>>& out) const {
    const Impl& m = *impl_;
    if (radius > m.max_radius) throw UsageError("query radius exceeds the index design maximum");
    if (!(radius > 0.0) || m.ids.empty()) return;
    const std::size_t N = m.ids.size();
    const double reach = radius + kMargin;
    switch (m.kind) {
        case Kind::circle: {
            if (reach >= kPi) {
                for (std::size_t j = 0; j < N; ++j) m.check(q, radius, j, out);
                return;
            }
            const double p0 = std::atan2(q[1], q[0]);
            auto scan = [&](double lo, double hi) {
                auto b = std::lower_bound(m.phi.begin(), m.phi.end(), lo);
                auto e = std::upper_bound(m.phi.begin(), m.phi.end(), hi);
                for (auto it = b; it < e; ++it) m.check(q, radius, it - m.phi.begin(), out);
            };
            const double lo = p0 - reach, hi = p0 + reach;
            scan(std::max(lo, -kPi), std::min(hi, kPi));
            if (lo < -kPi) scan(lo + 2 * kPi, kPi);
            if (hi > kPi) scan(-kPi, hi - 2 * kPi);
            return;
        }
        case Kind::grid: {
            const double th0 = Impl::colatitude(q);
            const double p0 = std::atan2(q[1], q[0]);
            const int b0 = std::max(0, static_cast<int>(std::floor((th0 - reach) / m.h)));
            const int b1 = std::min(m.bands - 1, static_cast<int>(std::floor((th0 + reach) / m.h)));
            bool full = th0 - reach <= 0.0 || th0 + reach >= kPi;
            double dphi = kPi;
            if (!full) {
                const double s = std::sin(reach) / std::sin(th0);
                if (s >= 1.0) full = true;
                else dphi = std::asin(s) + kMargin;
            }
            for (int b = b0; b <= b1; ++b) {
                const int cells = m.cells_in_band[b];
                const std::size_t off = m.band_offset[b];
                const int c0 = static_cast<int>(std::floor((p0 - dphi + kPi) / (2 * kPi) * cells));
                const int c1 = static_cast<int>(std::floor((p0 + dphi + kPi) / (2 * kPi) * cells));
                if (full || c1 - c0 + 1 >= cells) {
                    for (std::size_t j = m.cell_start[off]; j < m.cell_start[off + cells]; ++j)
                        m.check(q, radius, j, out);
                    continue;
                }
                for (int c = c0; c <= c1; ++c) {
                    const int cc = ((c % cells) + cells) % cells;
                    for (std::size_t j = m.cell_start[off + cc]; j < m.cell_start[off + cc + 1]; ++j)
                        m.check(q, radius, j, out);
                }
            }
            return;
        }
        case Kind::cap_tree: {
            std::vector<std::int32_t> stack{0};
            while (!stack.empty()) {
                const CapNode& nd = m.nodes[stack.back()];
                stack.pop_back();
                const double a = vector_angle(q, m.centers.data() + nd.center, m.n);
                if (a - nd.radius >= reach) continue;
                if (nd.left < 0) {
                    for (std::size_t j = nd.begin; j < nd.end; ++j) m.check(q, radius, j, out);
                } else {
                    stack.push_back(nd.right);
                    stack.push_back(nd.left);
                }
            }
            return;
        }
    }
}

std::vector<std::uint32_t> NeighborIndex::query_ids(const double* dir, double radius) const {
    std::vector<std::pair<std::uint32_t, double>> hits;
    query(dir, radius, hits);
    std::vector<std::uint32_t> ids;
    ids.reserve(hits.size());
    for (const auto& h : hits) ids.push_back(h.first);
    std::sort(ids.begin(), ids.end());
    return ids;
}

NeighborIndex build_neighbor_index(const OrbitDataset& ds, double max_radius) {
    std::vector<double> dirs;
    std::vector<std::uint32_t> ids;
    dirs.reserve(ds.size() * ds.n);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.is_base(i)) continue;
        dirs.insert(dirs.end(), ds.dir(i), ds.dir(i) + ds.n);
        ids.push_back(static_cast<std::uint32_t>(i));
    }
    return NeighborIndex(std::move(dirs), std::move(ids), ds.n, max_radius);
}

}  // namespace hyperangle
