#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace rareis::num {

// Strictly increasing state grid s_0 = 0 < s_1 < ... < s_K = s_bar, K >= 2.
struct Grid1D {
    std::vector<double> points;

    explicit Grid1D(std::vector<double> pts) : points(std::move(pts)) { validate(); }

    static Grid1D uniform(int k, double s_bar) {
        require_shape(k, s_bar);
        std::vector<double> pts(static_cast<std::size_t>(k) + 1);
        for (int j = 0; j <= k; ++j) pts[j] = s_bar * (static_cast<double>(j) / k);
        pts.back() = s_bar;
        return Grid1D(std::move(pts));
    }

    // Spacing shrinks toward s_bar by the power law 1-(1-j/K)^strength;
    // useful for left-tail problems where the value function bends near the
    // threshold. strength = 1 reproduces the uniform grid.
    static Grid1D clustered(int k, double s_bar, double strength) {
        require_shape(k, s_bar);
        if (!(strength >= 1.0)) throw std::invalid_argument("Grid1D: strength must be >= 1");
        std::vector<double> pts(static_cast<std::size_t>(k) + 1);
        for (int j = 0; j <= k; ++j)
            pts[j] = s_bar * (1.0 - std::pow(1.0 - static_cast<double>(j) / k, strength));
        pts.front() = 0.0;
        pts.back() = s_bar;
        return Grid1D(std::move(pts));
    }

    int k() const { return static_cast<int>(points.size()) - 1; }
    double s_bar() const { return points.back(); }

private:
    static void require_shape(int k, double s_bar) {
        if (k < 2) throw std::invalid_argument("Grid1D: K must be >= 2");
        if (!(s_bar > 0.0) || !std::isfinite(s_bar))
            throw std::invalid_argument("Grid1D: s_bar must be positive and finite");
    }

    void validate() const {
        if (points.size() < 3) throw std::invalid_argument("Grid1D: K must be >= 2");
        if (points.front() != 0.0) throw std::invalid_argument("Grid1D: s_0 must be 0");
        for (std::size_t i = 1; i < points.size(); ++i)
            if (!(points[i] > points[i - 1]))
                throw std::invalid_argument("Grid1D: points must be strictly increasing");
    }
};

// Piecewise-linear interpolation of a value-function row. Beyond s_K the
// last segment extends linearly, clamped at 0: value functions are second
// moments, and a sign flip from extrapolation would be meaningless.
inline double interp_linear(const Grid1D& grid, std::span<const double> values, double s) {
    const auto& p = grid.points;
    if (values.size() != p.size())
        throw std::invalid_argument("interp_linear: values/grid size mismatch");
    if (s <= p.front()) return values.front();
    const std::size_t last = p.size() - 1;
    if (s >= p[last]) {
        const double slope = (values[last] - values[last - 1]) / (p[last] - p[last - 1]);
        return std::max(0.0, values[last] + slope * (s - p[last]));
    }
    const auto it = std::upper_bound(p.begin(), p.end(), s);
    const std::size_t hi = static_cast<std::size_t>(it - p.begin());
    const double w = (s - p[hi - 1]) / (p[hi] - p[hi - 1]);
    return values[hi - 1] + w * (values[hi] - values[hi - 1]);
}

}  // namespace rareis::num
