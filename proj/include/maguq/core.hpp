#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace maguq {

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes:
//   ConfigError/FormatError -> 2, NumericalError -> 3, BudgetError -> 4.
// ---------------------------------------------------------------------------

/// Invalid configuration, bad parameter combination, missing region, ...
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file (carries file/line context in the message).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-convergence, indefinite system, unreachable threshold.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A configured resource budget (node count, memory) would be exceeded.
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Planar geometry primitives shared by the mesh and the clustering code.
// ---------------------------------------------------------------------------

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double l1_distance(const Point2& a, const Point2& b) {
    return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

inline double l2_distance(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Axis-parallel rectangle given by its min/max corners.
struct Rect {
    Point2 lo{0.0, 0.0};
    Point2 hi{0.0, 0.0};

    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }

    /// Euclidean diameter (length of the diagonal).
    double diameter() const { return std::hypot(width(), height()); }

    bool contains(const Point2& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }

    /// Smallest rectangle containing both this and `other`.
    void expand(const Rect& other) {
        lo.x = std::min(lo.x, other.lo.x);
        lo.y = std::min(lo.y, other.lo.y);
        hi.x = std::max(hi.x, other.hi.x);
        hi.y = std::max(hi.y, other.hi.y);
    }

    void expand(const Point2& p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }

    static Rect of_point(const Point2& p) { return Rect{p, p}; }
};

/// Euclidean set distance between two axis-parallel rectangles
/// (componentwise gap, zero when they touch or overlap).
inline double rect_distance(const Rect& a, const Rect& b) {
    const double gx = std::max({0.0, a.lo.x - b.hi.x, b.lo.x - a.hi.x});
    const double gy = std::max({0.0, a.lo.y - b.hi.y, b.lo.y - a.hi.y});
    return std::hypot(gx, gy);
}

// ---------------------------------------------------------------------------
// Minimal static-partition parallel loop. Work items must be independent and
// write only to their own slots so results do not depend on the schedule.
// ---------------------------------------------------------------------------

/// Variant passing the worker index, for per-thread scratch state.
inline void parallel_for_workers(std::size_t n, int threads,
                                 const std::function<void(int, std::size_t)>& body) {
    if (n == 0) return;
    const std::size_t nt = std::min<std::size_t>(std::max(threads, 1), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(0, i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::vector<std::exception_ptr> errors(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += nt) body(static_cast<int>(t), i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& body) {
    parallel_for_workers(n, threads, [&](int, std::size_t i) { body(i); });
}

}  // namespace maguq
