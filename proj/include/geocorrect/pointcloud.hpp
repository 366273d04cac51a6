#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geocorrect/core.hpp"

namespace geocorrect {

struct PointRecord {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    std::optional<std::uint8_t> classification;

    bool operator==(const PointRecord&) const = default;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Vec2&) const = default;
    auto operator<=>(const Vec2&) const = default;
};

enum class TileFormat { las, ascii };

struct TileHeader {
    std::string path;
    TileFormat format = TileFormat::las;
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;
    std::uint64_t point_count = 0;
};

enum class BoundaryMode { simple, convex };

std::string_view to_string(BoundaryMode mode);
BoundaryMode parse_boundary_mode(std::string_view name);

struct TileBoundary {
    std::string path;
    BoundaryMode mode = BoundaryMode::simple;
    std::vector<Vec2> polygon;  // CCW, implicitly closed
    bool degenerate = false;    // zero area

    bool operator==(const TileBoundary&) const = default;
};

// ---------------------------------------------------------------------------
// Tile I/O
//
// Binary tiles use the LAS 1.0-1.4 public header block and point formats 0-3;
// only the fields needed here are interpreted. ASCII tiles hold one
// "x y z [class]" line per point with '#' comments.
// ---------------------------------------------------------------------------

/// Reads extents and count. For LAS this touches only the header block; for
/// ASCII the extents come from a full scan. Throws Error(unsupported_tile_format)
/// or Error(corrupt_tile).
TileHeader read_tile_header(const std::filesystem::path& path);

/// All point records in file order. Throws Error(corrupt_tile) when the
/// payload disagrees with the header.
std::vector<PointRecord> read_points(const std::filesystem::path& path);

/// Writes a LAS 1.2 point-format-0 tile with 1 mm scale.
void write_las_tile(const std::filesystem::path& path, std::span<const PointRecord> points);
void write_ascii_tile(const std::filesystem::path& path, std::span<const PointRecord> points);

/// Process-wide I/O counters, used to verify the boundary cache.
std::uint64_t payload_read_count();
std::uint64_t header_read_count();
void reset_read_counters();

bool is_tile_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

TileBoundary compute_bbox(const TileHeader& header);

/// Andrew's monotone chain. CCW, collinear points dropped; one vertex for
/// identical input, two for collinear input.
std::vector<Vec2> compute_convex_hull(std::span<const Vec2> points);

/// Convex hull with the Akl-Toussaint octagon prefilter: points strictly
/// inside the octagon of the eight directional extremes cannot be hull
/// vertices and are discarded before sorting. Same result as
/// compute_convex_hull.
std::vector<Vec2> compute_convex_hull_filtered(std::span<const PointRecord> points,
                                               std::size_t* kept = nullptr);

double polygon_area(std::span<const Vec2> polygon);
bool point_in_convex_polygon(std::span<const Vec2> polygon, Vec2 p, double slack = 1e-9);

struct Box {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;
};

/// Separating-axis test between a convex polygon (possibly 1 or 2 vertices)
/// and an axis-aligned box. Touching counts as intersecting.
bool polygon_intersects_box(std::span<const Vec2> polygon, const Box& box);

// ---------------------------------------------------------------------------
// Boundary index
// ---------------------------------------------------------------------------

inline constexpr const char* kBoundaryCacheName = "boundaries.cache.json";

struct BoundaryIndex {
    std::vector<TileBoundary> boundaries;  // sorted by path
    std::vector<std::string> invalid;      // unreadable tiles
    std::size_t recomputed = 0;            // tiles (re)read on this call
    bool cache_written = false;
};

/// One boundary per readable tile in tile_dir. An up-to-date entry in
/// boundaries.cache.json is reused without touching the tile.
BoundaryIndex build_boundary_index(const std::filesystem::path& tile_dir, BoundaryMode mode);

/// Tiles whose boundary meets the axis-aligned square of side buffer_m
/// centred on (x, y), sorted by path.
std::vector<std::string> select_tiles(std::span<const TileBoundary> boundaries, double x, double y,
                                      double buffer_m = 50.0);
std::vector<std::string> select_tiles(std::span<const TileBoundary> boundaries,
                                      const Footprint& footprint, double buffer_m = 50.0);

// ---------------------------------------------------------------------------
// In-memory spatial bucket index over points
// ---------------------------------------------------------------------------

class PointIndex {
public:
    PointIndex() = default;
    PointIndex(std::vector<PointRecord> points, double cell_size = 2.0);

    const std::vector<PointRecord>& points() const { return points_; }
    bool empty() const { return points_.empty(); }

    /// Calls fn(point) for every point within radius of (x, y), in a fixed
    /// order that depends only on the index contents.
    template <typename Fn>
    void for_each_within(double x, double y, double radius, Fn&& fn) const {
        if (points_.empty()) return;
        const double r2 = radius * radius;
        const long c0 = clamp_col(static_cast<long>(std::floor((x - radius - origin_x_) / cell_)));
        const long c1 = clamp_col(static_cast<long>(std::floor((x + radius - origin_x_) / cell_)));
        const long r0 = clamp_row(static_cast<long>(std::floor((y - radius - origin_y_) / cell_)));
        const long r1 = clamp_row(static_cast<long>(std::floor((y + radius - origin_y_) / cell_)));
        for (long row = r0; row <= r1; ++row) {
            const std::size_t base = static_cast<std::size_t>(row * cols_);
            const std::uint32_t begin = cell_start_[base + static_cast<std::size_t>(c0)];
            const std::uint32_t end = cell_start_[base + static_cast<std::size_t>(c1) + 1];
            for (std::uint32_t i = begin; i < end; ++i) {
                const PointRecord& p = points_[i];
                const double ddx = p.x - x;
                const double ddy = p.y - y;
                if (ddx * ddx + ddy * ddy <= r2) fn(p);
            }
        }
    }

    /// Points inside the box, in index order.
    std::vector<PointRecord> collect(const Box& box) const;

private:
    std::vector<PointRecord> points_;  // sorted by cell
    std::vector<std::uint32_t> cell_start_;
    double cell_ = 2.0;
    double origin_x_ = 0.0;
    double origin_y_ = 0.0;
    long cols_ = 0;
    long rows_ = 0;

    long clamp_col(long c) const { return c < 0 ? 0 : (c >= cols_ ? cols_ - 1 : c); }
    long clamp_row(long r) const { return r < 0 ? 0 : (r >= rows_ ? rows_ - 1 : r); }
};

}  // namespace geocorrect
