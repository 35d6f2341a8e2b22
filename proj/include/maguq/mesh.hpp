#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maguq/core.hpp"

namespace maguq::mesh {

/// Element region tags. The integer values double as the Triangle-format
/// attribute column.
enum class Region : int {
    Core = 1,
    Air = 2,
    CoilPlusPrimary = 3,
    CoilMinusPrimary = 4,
    CoilSecondary = 5,
};

inline const char* region_name(Region r) {
    switch (r) {
        case Region::Core: return "core";
        case Region::Air: return "air";
        case Region::CoilPlusPrimary: return "coil+";
        case Region::CoilMinusPrimary: return "coil-";
        case Region::CoilSecondary: return "coil2";
    }
    return "?";
}

inline std::optional<Region> region_from_attribute(int value) {
    if (value >= 1 && value <= 5) return static_cast<Region>(value);
    return std::nullopt;
}

struct ElementGeometry {
    double area = 0.0;
    Point2 centroid{};
    Rect bbox{};
};

/// Triangulated 2D domain with per-element region tags.
/// Immutable after construction; all elements are counterclockwise.
struct TriMesh {
    std::vector<Point2> vertices;
    std::vector<std::array<int, 3>> elements;
    std::vector<Region> element_region;
    std::vector<int> boundary_vertices;  // sorted, unique

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }
};

inline double signed_area(const Point2& a, const Point2& b, const Point2& c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

inline ElementGeometry element_geometry(const TriMesh& m, int e) {
    const auto& t = m.elements.at(static_cast<std::size_t>(e));
    const Point2& a = m.vertices[static_cast<std::size_t>(t[0])];
    const Point2& b = m.vertices[static_cast<std::size_t>(t[1])];
    const Point2& c = m.vertices[static_cast<std::size_t>(t[2])];
    ElementGeometry g;
    g.area = signed_area(a, b, c);
    g.centroid = Point2{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
    g.bbox = Rect::of_point(a);
    g.bbox.expand(b);
    g.bbox.expand(c);
    return g;
}

inline std::vector<ElementGeometry> all_geometries(const TriMesh& m) {
    std::vector<ElementGeometry> out;
    out.reserve(m.elements.size());
    for (int e = 0; e < m.element_count(); ++e) out.push_back(element_geometry(m, e));
    return out;
}

/// Indices of the elements tagged with `r`, in element order.
inline std::vector<int> region_elements(const TriMesh& m, Region r) {
    std::vector<int> out;
    for (int e = 0; e < m.element_count(); ++e)
        if (m.element_region[static_cast<std::size_t>(e)] == r) out.push_back(e);
    return out;
}

inline std::vector<int> core_elements(const TriMesh& m) {
    return region_elements(m, Region::Core);
}

inline double region_area(const TriMesh& m, Region r) {
    double sum = 0.0;
    for (int e = 0; e < m.element_count(); ++e)
        if (m.element_region[static_cast<std::size_t>(e)] == r)
            sum += element_geometry(m, e).area;
    return sum;
}

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

/// Counts how many elements share each undirected edge.
inline std::map<std::uint64_t, int> edge_incidence(const TriMesh& m) {
    std::map<std::uint64_t, int> count;
    for (const auto& t : m.elements)
        for (int k = 0; k < 3; ++k) ++count[edge_key(t[k], t[(k + 1) % 3])];
    return count;
}

inline void detect_boundary(TriMesh& m) {
    const auto inc = edge_incidence(m);
    std::vector<char> on_boundary(m.vertices.size(), 0);
    for (const auto& [key, n] : inc) {
        if (n == 1) {
            on_boundary[key >> 32] = 1;
            on_boundary[key & 0xffffffffu] = 1;
        }
    }
    m.boundary_vertices.clear();
    for (int v = 0; v < m.vertex_count(); ++v)
        if (on_boundary[static_cast<std::size_t>(v)]) m.boundary_vertices.push_back(v);
}

/// Reorders any clockwise element to counterclockwise and rejects degenerate
/// triangles. Call before boundary detection.
inline void normalize_orientation(TriMesh& m) {
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
        auto& t = m.elements[e];
        const double s = signed_area(m.vertices[static_cast<std::size_t>(t[0])],
                                     m.vertices[static_cast<std::size_t>(t[1])],
                                     m.vertices[static_cast<std::size_t>(t[2])]);
        if (s < 0.0) std::swap(t[1], t[2]);
        else if (s == 0.0)
            throw FormatError("element " + std::to_string(e) + " is degenerate (zero area)");
    }
}

struct Tokens {
    std::vector<std::string> items;
    int line_no = 0;
};

/// Next non-empty, non-comment line split on whitespace. Triangle files use
/// '#' comments and allow trailing comments.
inline std::optional<Tokens> next_tokens(std::istream& in, int& line_no) {
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
        std::istringstream ss(line);
        Tokens tok;
        tok.line_no = line_no;
        std::string item;
        while (ss >> item) tok.items.push_back(item);
        if (!tok.items.empty()) return tok;
    }
    return std::nullopt;
}

inline double parse_double(const std::string& s, const std::string& file, int line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError(file + ":" + std::to_string(line) + ": expected a number, got '" + s + "'");
    }
}

inline long parse_long(const std::string& s, const std::string& file, int line) {
    try {
        std::size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError(file + ":" + std::to_string(line) + ": expected an integer, got '" + s + "'");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Triangle ASCII .node/.ele readers and writers. Zero- or one-based indexing
// is autodetected from the first index in each file; the .ele file must carry
// one attribute column holding the region tag (1..5).
// ---------------------------------------------------------------------------

inline TriMesh load_triangle_mesh(const std::string& node_path, const std::string& ele_path) {
    TriMesh m;

    {
        std::ifstream in(node_path);
        if (!in) throw FormatError(node_path + ": cannot open");
        int line_no = 0;
        auto header = detail::next_tokens(in, line_no);
        if (!header || header->items.size() < 2)
            throw FormatError(node_path + ": missing or short header line");
        const long n_vertices = detail::parse_long(header->items[0], node_path, header->line_no);
        const long dim = detail::parse_long(header->items[1], node_path, header->line_no);
        if (n_vertices <= 0)
            throw FormatError(node_path + ":" + std::to_string(header->line_no) + ": vertex count must be positive");
        if (dim != 2)
            throw FormatError(node_path + ":" + std::to_string(header->line_no) + ": only 2D meshes are supported");

        long base = -1;
        m.vertices.resize(static_cast<std::size_t>(n_vertices));
        for (long i = 0; i < n_vertices; ++i) {
            auto tok = detail::next_tokens(in, line_no);
            if (!tok)
                throw FormatError(node_path + ": expected " + std::to_string(n_vertices) +
                                  " vertex lines, got " + std::to_string(i));
            if (tok->items.size() < 3)
                throw FormatError(node_path + ":" + std::to_string(tok->line_no) + ": short vertex line");
            const long idx = detail::parse_long(tok->items[0], node_path, tok->line_no);
            if (base < 0) {
                if (idx != 0 && idx != 1)
                    throw FormatError(node_path + ":" + std::to_string(tok->line_no) +
                                      ": first vertex index must be 0 or 1");
                base = idx;
            }
            const long slot = idx - base;
            if (slot < 0 || slot >= n_vertices)
                throw FormatError(node_path + ":" + std::to_string(tok->line_no) +
                                  ": vertex index " + std::to_string(idx) + " out of range");
            m.vertices[static_cast<std::size_t>(slot)] =
                Point2{detail::parse_double(tok->items[1], node_path, tok->line_no),
                       detail::parse_double(tok->items[2], node_path, tok->line_no)};
        }
    }

    {
        std::ifstream in(ele_path);
        if (!in) throw FormatError(ele_path + ": cannot open");
        int line_no = 0;
        auto header = detail::next_tokens(in, line_no);
        if (!header || header->items.size() < 3)
            throw FormatError(ele_path + ": missing or short header line");
        const long n_elements = detail::parse_long(header->items[0], ele_path, header->line_no);
        const long nodes_per = detail::parse_long(header->items[1], ele_path, header->line_no);
        const long n_attr = detail::parse_long(header->items[2], ele_path, header->line_no);
        if (n_elements <= 0)
            throw FormatError(ele_path + ":" + std::to_string(header->line_no) + ": element count must be positive");
        if (nodes_per != 3)
            throw FormatError(ele_path + ":" + std::to_string(header->line_no) +
                              ": only 3-node triangles are supported");
        if (n_attr < 1)
            throw FormatError(ele_path + ":" + std::to_string(header->line_no) +
                              ": expected one attribute column carrying the region tag");

        long vbase = -1;
        m.elements.resize(static_cast<std::size_t>(n_elements));
        m.element_region.resize(static_cast<std::size_t>(n_elements));
        long ebase = -1;
        for (long i = 0; i < n_elements; ++i) {
            auto tok = detail::next_tokens(in, line_no);
            if (!tok)
                throw FormatError(ele_path + ": expected " + std::to_string(n_elements) +
                                  " element lines, got " + std::to_string(i));
            if (tok->items.size() < 5)
                throw FormatError(ele_path + ":" + std::to_string(tok->line_no) + ": short element line");
            const long idx = detail::parse_long(tok->items[0], ele_path, tok->line_no);
            if (ebase < 0) {
                if (idx != 0 && idx != 1)
                    throw FormatError(ele_path + ":" + std::to_string(tok->line_no) +
                                      ": first element index must be 0 or 1");
                ebase = idx;
            }
            const long slot = idx - ebase;
            if (slot < 0 || slot >= n_elements)
                throw FormatError(ele_path + ":" + std::to_string(tok->line_no) +
                                  ": element index " + std::to_string(idx) + " out of range");

            std::array<int, 3> tri{};
            for (int k = 0; k < 3; ++k) {
                const long v = detail::parse_long(tok->items[static_cast<std::size_t>(1 + k)], ele_path, tok->line_no);
                if (vbase < 0) vbase = (v == 0) ? 0 : 1;  // settled by the very first reference
                const long vi = v - vbase;
                if (vi < 0 || vi >= static_cast<long>(m.vertices.size()))
                    throw FormatError(ele_path + ":" + std::to_string(tok->line_no) +
                                      ": vertex index " + std::to_string(v) + " out of range");
                tri[k] = static_cast<int>(vi);
            }
            const double attr = detail::parse_double(tok->items[4], ele_path, tok->line_no);
            const long attr_int = std::lround(attr);
            if (std::abs(attr - static_cast<double>(attr_int)) > 1e-9)
                throw FormatError(ele_path + ":" + std::to_string(tok->line_no) +
                                  ": region attribute must be an integer, got " + tok->items[4]);
            auto region = region_from_attribute(static_cast<int>(attr_int));
            if (!region)
                throw FormatError(ele_path + ":" + std::to_string(tok->line_no) +
                                  ": unknown region attribute " + std::to_string(attr_int));
            m.elements[static_cast<std::size_t>(slot)] = tri;
            m.element_region[static_cast<std::size_t>(slot)] = *region;
        }
    }

    detail::normalize_orientation(m);
    detail::detect_boundary(m);
    return m;
}

/// Writes one-based Triangle .node/.ele files with full double precision so a
/// write/load round trip reproduces the mesh exactly.
inline void write_triangle_mesh(const TriMesh& m, const std::string& node_path,
                                const std::string& ele_path) {
    char buf[96];
    {
        std::ofstream out(node_path);
        if (!out) throw FormatError(node_path + ": cannot open for writing");
        out << m.vertex_count() << " 2 0 0\n";
        for (int v = 0; v < m.vertex_count(); ++v) {
            std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", v + 1,
                          m.vertices[static_cast<std::size_t>(v)].x,
                          m.vertices[static_cast<std::size_t>(v)].y);
            out << buf;
        }
    }
    {
        std::ofstream out(ele_path);
        if (!out) throw FormatError(ele_path + ": cannot open for writing");
        out << m.element_count() << " 3 1\n";
        for (int e = 0; e < m.element_count(); ++e) {
            const auto& t = m.elements[static_cast<std::size_t>(e)];
            out << (e + 1) << ' ' << (t[0] + 1) << ' ' << (t[1] + 1) << ' ' << (t[2] + 1) << ' '
                << static_cast<int>(m.element_region[static_cast<std::size_t>(e)]) << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Structured generators.
// ---------------------------------------------------------------------------

/// Parameters of the built-in transformer-like cross section. The outer
/// rectangle is the computational domain; a centered window holds the two
/// primary-coil columns (+ left, - right) with a secondary column next to
/// each, and four thin gaps cut the core ring into four segments at the
/// limb/yoke junctions. The defaults are configuration, not benchmark data.
struct ReferenceParams {
    double core_width = 0.06;    // m, outer width
    double core_height = 0.08;   // m, outer height
    double limb_width = 0.015;   // m, left/right limb thickness
    double window_height = 0.05; // m, window vertical extent
    double gap = 0.0005;         // m, air-gap thickness
    double coil_width = 0.006;   // m, one coil column
    double target_h = 0.0022;    // m, target edge length
};

namespace detail {

struct ReferenceLayout {
    Rect window;
    std::array<Rect, 4> gaps;
    Rect coil_plus, coil_minus, secondary_left, secondary_right;
};

inline ReferenceLayout reference_layout(const ReferenceParams& p) {
    if (p.core_width <= 0 || p.core_height <= 0 || p.limb_width <= 0 || p.window_height <= 0 ||
        p.gap <= 0 || p.coil_width <= 0 || p.target_h <= 0)
        throw ConfigError("reference geometry: all lengths must be positive");

    const double ww = p.core_width - 2.0 * p.limb_width;
    if (ww <= 0)
        throw ConfigError("reference geometry: window does not fit inside the core (limbs too wide)");
    if (p.window_height >= p.core_height)
        throw ConfigError("reference geometry: window does not fit inside the core (window too tall)");
    if (ww < 4.0 * p.coil_width)
        throw ConfigError("reference geometry: coil columns do not fit inside the window");
    const double wy0 = 0.5 * (p.core_height - p.window_height);
    const double wy1 = 0.5 * (p.core_height + p.window_height);
    if (p.gap >= wy0)
        throw ConfigError("reference geometry: gap must be smaller than the yoke thickness");

    ReferenceLayout L;
    const double x0 = p.limb_width, x1 = p.core_width - p.limb_width;
    L.window = Rect{{x0, wy0}, {x1, wy1}};
    // One gap below and one above each limb, spanning the limb thickness.
    L.gaps[0] = Rect{{0.0, wy0 - p.gap}, {x0, wy0}};
    L.gaps[1] = Rect{{0.0, wy1}, {x0, wy1 + p.gap}};
    L.gaps[2] = Rect{{x1, wy0 - p.gap}, {p.core_width, wy0}};
    L.gaps[3] = Rect{{x1, wy1}, {p.core_width, wy1 + p.gap}};
    L.coil_plus = Rect{{x0, wy0}, {x0 + p.coil_width, wy1}};
    L.secondary_left = Rect{{x0 + p.coil_width, wy0}, {x0 + 2.0 * p.coil_width, wy1}};
    L.coil_minus = Rect{{x1 - p.coil_width, wy0}, {x1, wy1}};
    L.secondary_right = Rect{{x1 - 2.0 * p.coil_width, wy0}, {x1 - p.coil_width, wy1}};
    return L;
}

inline Region classify(const ReferenceLayout& L, const Point2& p) {
    for (const auto& g : L.gaps)
        if (g.contains(p)) return Region::Air;
    if (L.window.contains(p)) {
        if (L.coil_plus.contains(p)) return Region::CoilPlusPrimary;
        if (L.coil_minus.contains(p)) return Region::CoilMinusPrimary;
        if (L.secondary_left.contains(p) || L.secondary_right.contains(p))
            return Region::CoilSecondary;
        return Region::Air;
    }
    return Region::Core;
}

/// Breakpoint list: feature coordinates plus uniform subdivision at ~h.
inline std::vector<double> subdivide(std::vector<double> features, double h) {
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end(),
                               [](double a, double b) { return std::abs(a - b) < 1e-15; }),
                   features.end());
    std::vector<double> out;
    out.push_back(features.front());
    for (std::size_t i = 0; i + 1 < features.size(); ++i) {
        const double a = features[i], b = features[i + 1];
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-12)));
        for (int k = 1; k < n; ++k) out.push_back(a + (b - a) * k / n);
        out.push_back(b);
    }
    return out;
}

/// Triangulates the tensor grid xs x ys and tags each triangle by centroid.
inline TriMesh grid_mesh(const std::vector<double>& xs, const std::vector<double>& ys,
                         const std::function<Region(const Point2&)>& tag) {
    TriMesh m;
    const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
    m.vertices.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            m.vertices.push_back(Point2{xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]});
    auto vid = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const int ll = vid(i, j), lr = vid(i + 1, j), ul = vid(i, j + 1), ur = vid(i + 1, j + 1);
            for (const auto& tri : {std::array<int, 3>{ll, lr, ur}, std::array<int, 3>{ll, ur, ul}}) {
                const Point2& a = m.vertices[static_cast<std::size_t>(tri[0])];
                const Point2& b = m.vertices[static_cast<std::size_t>(tri[1])];
                const Point2& c = m.vertices[static_cast<std::size_t>(tri[2])];
                m.elements.push_back(tri);
                m.element_region.push_back(
                    tag(Point2{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0}));
            }
        }
    }
    detail::normalize_orientation(m);
    detail::detect_boundary(m);
    return m;
}

}  // namespace detail

inline TriMesh generate_reference_geometry(const ReferenceParams& p) {
    const auto L = detail::reference_layout(p);
    std::vector<double> xf = {0.0,
                              L.coil_plus.lo.x,
                              L.coil_plus.hi.x,
                              L.secondary_left.hi.x,
                              L.secondary_right.lo.x,
                              L.coil_minus.lo.x,
                              L.coil_minus.hi.x,
                              p.core_width};
    std::vector<double> yf = {0.0,
                              L.gaps[0].lo.y,
                              L.window.lo.y,
                              L.window.hi.y,
                              L.gaps[1].hi.y,
                              p.core_height};
    const auto xs = detail::subdivide(std::move(xf), p.target_h);
    const auto ys = detail::subdivide(std::move(yf), p.target_h);
    return detail::grid_mesh(xs, ys, [&L](const Point2& q) { return detail::classify(L, q); });
}

/// Exact core area of the generated reference geometry.
inline double reference_core_area(const ReferenceParams& p) {
    const double ww = p.core_width - 2.0 * p.limb_width;
    return p.core_width * p.core_height - ww * p.window_height - 4.0 * p.limb_width * p.gap;
}

/// Uniformly triangulated rectangle [0,w] x [0,h] with a single region tag.
inline TriMesh make_rectangle_mesh(double width, double height, double target_h,
                                   Region tag = Region::Core) {
    if (width <= 0 || height <= 0 || target_h <= 0)
        throw ConfigError("rectangle mesh: all lengths must be positive");
    const auto xs = detail::subdivide({0.0, width}, target_h);
    const auto ys = detail::subdivide({0.0, height}, target_h);
    return detail::grid_mesh(xs, ys, [tag](const Point2&) { return tag; });
}

// ---------------------------------------------------------------------------
// Mesh diagnostics.
// ---------------------------------------------------------------------------

/// True when every interior edge is shared by exactly two elements and every
/// boundary edge by exactly one.
inline bool is_conforming(const TriMesh& m) {
    for (const auto& [key, n] : detail::edge_incidence(m))
        if (n != 1 && n != 2) return false;
    return true;
}

/// Number of edge-connected components among the elements of a region.
inline int region_component_count(const TriMesh& m, Region r) {
    const auto elems = region_elements(m, r);
    std::map<int, int> local;  // element id -> local index
    for (std::size_t i = 0; i < elems.size(); ++i) local[elems[i]] = static_cast<int>(i);

    std::vector<int> parent(elems.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    };

    std::map<std::uint64_t, int> edge_owner;
    for (int e : elems) {
        const auto& t = m.elements[static_cast<std::size_t>(e)];
        for (int k = 0; k < 3; ++k) {
            const auto key = detail::edge_key(t[k], t[(k + 1) % 3]);
            auto [it, inserted] = edge_owner.try_emplace(key, e);
            if (!inserted) {
                const int ra = find(local[it->second]);
                const int rb = find(local[e]);
                if (ra != rb) parent[static_cast<std::size_t>(ra)] = rb;
            }
        }
    }
    int components = 0;
    for (std::size_t i = 0; i < elems.size(); ++i)
        if (find(static_cast<int>(i)) == static_cast<int>(i)) ++components;
    return components;
}

}  // namespace maguq::mesh
