#include "geocorrect/pointcloud.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geocorrect/error.hpp"

namespace fs = std::filesystem;

namespace geocorrect {

namespace {

std::atomic<std::uint64_t> g_payload_reads{0};
std::atomic<std::uint64_t> g_header_reads{0};

// LAS public header block offsets (identical for versions 1.0 - 1.4).
constexpr std::size_t kLasVersionMajor = 24;
constexpr std::size_t kLasVersionMinor = 25;
constexpr std::size_t kLasHeaderSize = 94;
constexpr std::size_t kLasPointOffset = 96;
constexpr std::size_t kLasPointFormat = 104;
constexpr std::size_t kLasRecordLength = 105;
constexpr std::size_t kLasPointCount = 107;
constexpr std::size_t kLasReturnCounts = 111;
constexpr std::size_t kLasScale = 131;
constexpr std::size_t kLasOffset = 155;
constexpr std::size_t kLasBounds = 179;  // max x, min x, max y, min y, max z, min z
constexpr std::size_t kLas12HeaderBytes = 227;
constexpr std::size_t kLas14PointCount64 = 247;
constexpr std::size_t kLas14HeaderBytes = 375;
constexpr std::size_t kLasClassificationByte = 15;

template <typename T>
T load_le(const unsigned char* p) {
    std::array<unsigned char, sizeof(T)> b{};
    std::memcpy(b.data(), p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
}

template <typename T>
void store_le(unsigned char* p, T v) {
    std::array<unsigned char, sizeof(T)> b{};
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    std::memcpy(p, b.data(), sizeof(T));
}

struct LasLayout {
    std::uint32_t point_offset = 0;
    std::uint16_t record_length = 0;
    std::uint64_t count = 0;
    std::array<double, 3> scale{};
    std::array<double, 3> offset{};
    double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
};

bool has_las_signature(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    char sig[4] = {};
    in.read(sig, 4);
    return in.gcount() == 4 && std::memcmp(sig, "LASF", 4) == 0;
}

LasLayout parse_las_header(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open tile " + path.string());
    std::vector<unsigned char> buf(kLas14HeaderBytes, 0);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got < 4 || std::memcmp(buf.data(), "LASF", 4) != 0) {
        throw Error(ErrorKind::unsupported_tile_format, "unsupported tile format");
    }
    if (got < kLas12HeaderBytes) throw Error(ErrorKind::corrupt_tile, "corrupt tile");

    const unsigned major = buf[kLasVersionMajor];
    const unsigned minor = buf[kLasVersionMinor];
    const unsigned format = buf[kLasPointFormat];
    if (major != 1 || minor > 4 || format > 3) {
        throw Error(ErrorKind::unsupported_tile_format, "unsupported tile format");
    }
    LasLayout l;
    const auto header_size = load_le<std::uint16_t>(&buf[kLasHeaderSize]);
    l.point_offset = load_le<std::uint32_t>(&buf[kLasPointOffset]);
    l.record_length = load_le<std::uint16_t>(&buf[kLasRecordLength]);
    l.count = load_le<std::uint32_t>(&buf[kLasPointCount]);
    if (minor == 4) {
        if (header_size < kLas14HeaderBytes || got < kLas14HeaderBytes) {
            throw Error(ErrorKind::corrupt_tile, "corrupt tile");
        }
        const auto count64 = load_le<std::uint64_t>(&buf[kLas14PointCount64]);
        if (l.count == 0) l.count = count64;
    }
    if (header_size < kLas12HeaderBytes || l.point_offset < header_size || l.record_length < 12) {
        throw Error(ErrorKind::corrupt_tile, "corrupt tile");
    }
    for (int i = 0; i < 3; ++i) {
        l.scale[static_cast<std::size_t>(i)] = load_le<double>(&buf[kLasScale + 8 * static_cast<std::size_t>(i)]);
        l.offset[static_cast<std::size_t>(i)] = load_le<double>(&buf[kLasOffset + 8 * static_cast<std::size_t>(i)]);
    }
    l.max_x = load_le<double>(&buf[kLasBounds + 0]);
    l.min_x = load_le<double>(&buf[kLasBounds + 8]);
    l.max_y = load_le<double>(&buf[kLasBounds + 16]);
    l.min_y = load_le<double>(&buf[kLasBounds + 24]);
    for (double v : {l.min_x, l.max_x, l.min_y, l.max_y, l.scale[0], l.scale[1], l.scale[2]}) {
        if (!std::isfinite(v)) throw Error(ErrorKind::corrupt_tile, "corrupt tile");
    }
    if (l.min_x > l.max_x || l.min_y > l.max_y) throw Error(ErrorKind::corrupt_tile, "corrupt tile");
    return l;
}

// Parses "x y z [class]". Returns false on a malformed line.
bool parse_ascii_line(std::string_view line, PointRecord& out) {
    std::array<double, 4> v{};
    int n = 0;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == ',' ||
                                     line[pos] == '\r')) {
            ++pos;
        }
        if (pos >= line.size()) break;
        if (n == 4) return false;
        std::size_t end = pos;
        while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != ',' &&
               line[end] != '\r') {
            ++end;
        }
        const auto token = line.substr(pos, end - pos);
        std::string tmp(token);  // strtod tolerates forms from_chars rejects (leading '+')
        char* stop = nullptr;
        const double d = std::strtod(tmp.c_str(), &stop);
        if (stop != tmp.c_str() + tmp.size() || !std::isfinite(d)) return false;
        v[static_cast<std::size_t>(n++)] = d;
        pos = end;
    }
    if (n < 3) return false;
    out.x = v[0];
    out.y = v[1];
    out.z = v[2];
    out.classification.reset();
    if (n == 4) {
        if (v[3] < 0 || v[3] > 255 || v[3] != std::floor(v[3])) return false;
        out.classification = static_cast<std::uint8_t>(v[3]);
    }
    return true;
}

bool is_blank_or_comment(std::string_view line) {
    for (char c : line) {
        if (c == '#') return true;
        if (c != ' ' && c != '\t' && c != '\r') return false;
    }
    return true;
}

// Throws unsupported_tile_format if the first data line is not a point
// record, corrupt_tile for a later malformed line.
std::vector<PointRecord> scan_ascii(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open tile " + path.string());
    std::vector<PointRecord> points;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find('\0') != std::string::npos) {
            throw Error(ErrorKind::unsupported_tile_format, "unsupported tile format");
        }
        if (is_blank_or_comment(line)) continue;
        PointRecord p;
        if (!parse_ascii_line(line, p)) {
            throw Error(points.empty() ? ErrorKind::unsupported_tile_format : ErrorKind::corrupt_tile,
                        points.empty() ? "unsupported tile format" : "corrupt tile");
        }
        points.push_back(p);
    }
    return points;
}

double cross(Vec2 o, Vec2 a, Vec2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::int64_t mtime_ns(const fs::path& p) {
    const auto t = fs::last_write_time(p);
    return static_cast<std::int64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t.time_since_epoch()).count());
}

TileBoundary compute_boundary(const fs::path& path, BoundaryMode mode, std::size_t& hull_input) {
    const TileHeader header = read_tile_header(path);
    if (mode == BoundaryMode::simple) {
        hull_input = 0;
        return compute_bbox(header);
    }
    const auto points = read_points(path);
    if (points.empty()) throw Error(ErrorKind::corrupt_tile, "corrupt tile");
    TileBoundary b;
    b.path = path.string();
    b.mode = BoundaryMode::convex;
    b.polygon = compute_convex_hull_filtered(points, &hull_input);
    b.degenerate = polygon_area(b.polygon) <= 0.0;
    return b;
}

nlohmann::json boundary_to_json(const TileBoundary& b) {
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& v : b.polygon) poly.push_back({v.x, v.y});
    return poly;
}

}  // namespace

std::string_view to_string(BoundaryMode mode) {
    return mode == BoundaryMode::simple ? "simple" : "convex";
}

BoundaryMode parse_boundary_mode(std::string_view name) {
    if (name == "simple") return BoundaryMode::simple;
    if (name == "convex") return BoundaryMode::convex;
    throw Error(ErrorKind::config, "unknown boundary algorithm '" + std::string(name) + "'");
}

std::uint64_t payload_read_count() { return g_payload_reads.load(); }
std::uint64_t header_read_count() { return g_header_reads.load(); }
void reset_read_counters() {
    g_payload_reads = 0;
    g_header_reads = 0;
}

bool is_tile_file(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".las" || ext == ".xyz" || ext == ".txt";
}

TileHeader read_tile_header(const fs::path& path) {
    ++g_header_reads;
    if (!fs::exists(path)) throw Error(ErrorKind::io, "tile not found: " + path.string());
    TileHeader h;
    h.path = path.string();
    if (has_las_signature(path)) {
        const LasLayout l = parse_las_header(path);
        h.format = TileFormat::las;
        h.min_x = l.min_x;
        h.max_x = l.max_x;
        h.min_y = l.min_y;
        h.max_y = l.max_y;
        h.point_count = l.count;
        return h;
    }
    const auto points = scan_ascii(path);
    if (points.empty()) throw Error(ErrorKind::corrupt_tile, "corrupt tile");
    h.format = TileFormat::ascii;
    h.min_x = h.max_x = points.front().x;
    h.min_y = h.max_y = points.front().y;
    for (const auto& p : points) {
        h.min_x = std::min(h.min_x, p.x);
        h.max_x = std::max(h.max_x, p.x);
        h.min_y = std::min(h.min_y, p.y);
        h.max_y = std::max(h.max_y, p.y);
    }
    h.point_count = points.size();
    return h;
}

std::vector<PointRecord> read_points(const fs::path& path) {
    ++g_payload_reads;
    if (!fs::exists(path)) throw Error(ErrorKind::io, "tile not found: " + path.string());
    if (!has_las_signature(path)) return scan_ascii(path);

    const LasLayout l = parse_las_header(path);
    const auto file_size = static_cast<std::uint64_t>(fs::file_size(path));
    const std::uint64_t need = static_cast<std::uint64_t>(l.point_offset) +
                               l.count * static_cast<std::uint64_t>(l.record_length);
    if (file_size < need) throw Error(ErrorKind::corrupt_tile, "corrupt tile");

    std::ifstream in(path, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(l.point_offset));
    std::vector<unsigned char> payload(static_cast<std::size_t>(l.count) * l.record_length);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
        throw Error(ErrorKind::corrupt_tile, "corrupt tile");
    }
    std::vector<PointRecord> points(static_cast<std::size_t>(l.count));
    for (std::size_t i = 0; i < points.size(); ++i) {
        const unsigned char* rec = payload.data() + i * l.record_length;
        PointRecord& p = points[i];
        p.x = load_le<std::int32_t>(rec + 0) * l.scale[0] + l.offset[0];
        p.y = load_le<std::int32_t>(rec + 4) * l.scale[1] + l.offset[1];
        p.z = load_le<std::int32_t>(rec + 8) * l.scale[2] + l.offset[2];
        if (l.record_length > kLasClassificationByte) {
            p.classification = static_cast<std::uint8_t>(rec[kLasClassificationByte] & 0x1F);
        }
    }
    return points;
}

void write_las_tile(const fs::path& path, std::span<const PointRecord> points) {
    constexpr double kScale = 0.001;
    constexpr std::uint16_t kRecordLength = 20;
    if (points.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(ErrorKind::io, "too many points for a LAS 1.2 tile");
    }
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x, min_z = min_x, max_z = -min_x;
    for (const auto& p : points) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
        min_z = std::min(min_z, p.z);
        max_z = std::max(max_z, p.z);
    }
    if (points.empty()) min_x = max_x = min_y = max_y = min_z = max_z = 0.0;

    // A zero offset keeps quantization independent of tile extent as long as
    // coordinates fit the scaled int32 range.
    auto pick_offset = [&](double lo, double hi) {
        const double lim = 2.0e9 * kScale;
        return (std::abs(lo) < lim && std::abs(hi) < lim) ? 0.0 : std::floor(lo);
    };
    const std::array<double, 3> off{pick_offset(min_x, max_x), pick_offset(min_y, max_y),
                                    pick_offset(min_z, max_z)};
    auto quant = [&](double v, double o) {
        return static_cast<std::int32_t>(std::llround((v - o) / kScale));
    };

    std::vector<unsigned char> header(kLas12HeaderBytes, 0);
    std::memcpy(header.data(), "LASF", 4);
    header[kLasVersionMajor] = 1;
    header[kLasVersionMinor] = 2;
    std::memcpy(&header[26], "geocorrect", 10);
    std::memcpy(&header[58], "geocorrect", 10);
    store_le<std::uint16_t>(&header[kLasHeaderSize], static_cast<std::uint16_t>(kLas12HeaderBytes));
    store_le<std::uint32_t>(&header[kLasPointOffset], static_cast<std::uint32_t>(kLas12HeaderBytes));
    header[kLasPointFormat] = 0;
    store_le<std::uint16_t>(&header[kLasRecordLength], kRecordLength);
    store_le<std::uint32_t>(&header[kLasPointCount], static_cast<std::uint32_t>(points.size()));
    store_le<std::uint32_t>(&header[kLasReturnCounts], static_cast<std::uint32_t>(points.size()));
    for (std::size_t i = 0; i < 3; ++i) {
        store_le<double>(&header[kLasScale + 8 * i], kScale);
        store_le<double>(&header[kLasOffset + 8 * i], off[i]);
    }
    // Bounds describe the stored (quantized) coordinates.
    auto dequant = [&](double v, double o) { return quant(v, o) * kScale + o; };
    const std::array<double, 6> bounds{dequant(max_x, off[0]), dequant(min_x, off[0]),
                                       dequant(max_y, off[1]), dequant(min_y, off[1]),
                                       dequant(max_z, off[2]), dequant(min_z, off[2])};
    for (std::size_t i = 0; i < bounds.size(); ++i) store_le<double>(&header[kLasBounds + 8 * i], bounds[i]);

    std::vector<unsigned char> payload(points.size() * kRecordLength, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        unsigned char* rec = payload.data() + i * kRecordLength;
        store_le<std::int32_t>(rec + 0, quant(points[i].x, off[0]));
        store_le<std::int32_t>(rec + 4, quant(points[i].y, off[1]));
        store_le<std::int32_t>(rec + 8, quant(points[i].z, off[2]));
        rec[14] = 0x09;  // return 1 of 1
        rec[kLasClassificationByte] = points[i].classification.value_or(1);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write tile " + path.string());
    out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw Error(ErrorKind::io, "cannot write tile " + path.string());
}

void write_ascii_tile(const fs::path& path, std::span<const PointRecord> points) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write tile " + path.string());
    out << "# x y z class\n";
    char buf[128];
    for (const auto& p : points) {
        int n = std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", p.x, p.y, p.z);
        out.write(buf, n);
        if (p.classification) out << ' ' << static_cast<int>(*p.classification);
        out << '\n';
    }
}

TileBoundary compute_bbox(const TileHeader& header) {
    TileBoundary b;
    b.path = header.path;
    b.mode = BoundaryMode::simple;
    b.polygon = {{header.min_x, header.min_y},
                 {header.max_x, header.min_y},
                 {header.max_x, header.max_y},
                 {header.min_x, header.max_y}};
    b.degenerate = header.min_x == header.max_x || header.min_y == header.max_y;
    return b;
}

std::vector<Vec2> compute_convex_hull(std::span<const Vec2> input) {
    std::vector<Vec2> pts(input.begin(), input.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() <= 2) return pts;

    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

std::vector<Vec2> compute_convex_hull_filtered(std::span<const PointRecord> points, std::size_t* kept) {
    if (points.empty()) {
        if (kept) *kept = 0;
        return {};
    }
    // Extremes along x, y, x+y and x-y.
    std::array<Vec2, 8> ext;
    ext.fill({points[0].x, points[0].y});
    std::array<double, 8> best{};
    auto key = [](int i, double x, double y) {
        switch (i) {
            case 0: return -x;
            case 1: return x;
            case 2: return -y;
            case 3: return y;
            case 4: return -(x + y);
            case 5: return x + y;
            case 6: return -(x - y);
            default: return x - y;
        }
    };
    for (int i = 0; i < 8; ++i) best[static_cast<std::size_t>(i)] = key(i, points[0].x, points[0].y);
    for (const auto& p : points) {
        for (int i = 0; i < 8; ++i) {
            const double k = key(i, p.x, p.y);
            if (k > best[static_cast<std::size_t>(i)]) {
                best[static_cast<std::size_t>(i)] = k;
                ext[static_cast<std::size_t>(i)] = {p.x, p.y};
            }
        }
    }
    const auto octagon = compute_convex_hull(ext);

    std::vector<Vec2> candidates(ext.begin(), ext.end());
    if (octagon.size() < 3) {
        for (const auto& p : points) candidates.push_back({p.x, p.y});
    } else {
        for (const auto& p : points) {
            const Vec2 v{p.x, p.y};
            bool strictly_inside = true;
            for (std::size_t i = 0; i < octagon.size(); ++i) {
                if (cross(octagon[i], octagon[(i + 1) % octagon.size()], v) <= 0) {
                    strictly_inside = false;
                    break;
                }
            }
            if (!strictly_inside) candidates.push_back(v);
        }
    }
    if (kept) *kept = candidates.size();
    return compute_convex_hull(candidates);
}

double polygon_area(std::span<const Vec2> polygon) {
    if (polygon.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const Vec2& a = polygon[i];
        const Vec2& b = polygon[(i + 1) % polygon.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return std::abs(twice) * 0.5;
}

bool point_in_convex_polygon(std::span<const Vec2> polygon, Vec2 p, double slack) {
    if (polygon.empty()) return false;
    if (polygon.size() == 1) return std::hypot(p.x - polygon[0].x, p.y - polygon[0].y) <= slack;
    if (polygon.size() == 2) {
        const Vec2 a = polygon[0], b = polygon[1];
        const double lx = b.x - a.x, ly = b.y - a.y;
        const double len2 = lx * lx + ly * ly;
        double t = ((p.x - a.x) * lx + (p.y - a.y) * ly) / len2;
        t = std::clamp(t, 0.0, 1.0);
        return std::hypot(p.x - (a.x + t * lx), p.y - (a.y + t * ly)) <= slack;
    }
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const Vec2& a = polygon[i];
        const Vec2& b = polygon[(i + 1) % polygon.size()];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (cross(a, b, p) < -slack * len) return false;
    }
    return true;
}

bool polygon_intersects_box(std::span<const Vec2> polygon, const Box& box) {
    if (polygon.empty()) return false;
    const std::array<Vec2, 4> corners{Vec2{box.min_x, box.min_y}, Vec2{box.max_x, box.min_y},
                                      Vec2{box.max_x, box.max_y}, Vec2{box.min_x, box.max_y}};
    auto separated_along = [&](double ax, double ay) {
        double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
        for (const auto& v : polygon) {
            const double d = v.x * ax + v.y * ay;
            pmin = std::min(pmin, d);
            pmax = std::max(pmax, d);
        }
        double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
        for (const auto& c : corners) {
            const double d = c.x * ax + c.y * ay;
            bmin = std::min(bmin, d);
            bmax = std::max(bmax, d);
        }
        return pmax < bmin || bmax < pmin;
    };
    if (separated_along(1.0, 0.0) || separated_along(0.0, 1.0)) return false;
    const std::size_t edges = polygon.size() == 2 ? 1 : (polygon.size() == 1 ? 0 : polygon.size());
    for (std::size_t i = 0; i < edges; ++i) {
        const Vec2& a = polygon[i];
        const Vec2& b = polygon[(i + 1) % polygon.size()];
        if (separated_along(-(b.y - a.y), b.x - a.x)) return false;
    }
    return true;
}

BoundaryIndex build_boundary_index(const fs::path& tile_dir, BoundaryMode mode) {
    if (!fs::is_directory(tile_dir)) {
        throw Error(ErrorKind::io, "tile directory not found: " + tile_dir.string());
    }
    std::vector<fs::path> tiles;
    for (const auto& entry : fs::directory_iterator(tile_dir)) {
        if (entry.is_regular_file() && is_tile_file(entry.path())) tiles.push_back(entry.path());
    }
    std::sort(tiles.begin(), tiles.end());

    const fs::path cache_path = tile_dir / kBoundaryCacheName;
    nlohmann::json cache;
    if (fs::exists(cache_path)) {
        try {
            std::ifstream in(cache_path);
            cache = nlohmann::json::parse(in);
            if (!cache.is_object() || !cache.contains("tiles") || !cache["tiles"].is_object()) {
                cache = nlohmann::json();
            }
        } catch (const nlohmann::json::exception&) {
            std::cerr << "warning: ignoring unreadable boundary cache " << cache_path << '\n';
            cache = nlohmann::json();
        }
    }
    const nlohmann::json old_entries = cache.is_object() ? cache["tiles"] : nlohmann::json::object();

    BoundaryIndex index;
    nlohmann::json entries = nlohmann::json::object();
    bool changed = old_entries.size() != tiles.size();
    for (const auto& tile : tiles) {
        const std::string name = tile.filename().string();
        const std::int64_t mtime = mtime_ns(tile);
        const auto it = old_entries.find(name);
        if (it != old_entries.end() && it->value("mtime", std::int64_t{-1}) == mtime &&
            it->value("mode", std::string()) == to_string(mode)) {
            entries[name] = *it;
            if (it->value("valid", false)) {
                TileBoundary b;
                b.path = tile.string();
                b.mode = mode;
                for (const auto& v : (*it)["polygon"]) b.polygon.push_back({v[0].get<double>(), v[1].get<double>()});
                b.degenerate = it->value("degenerate", false);
                index.boundaries.push_back(std::move(b));
            } else {
                index.invalid.push_back(tile.string());
            }
            continue;
        }
        changed = true;
        ++index.recomputed;
        nlohmann::json entry = {{"mtime", mtime}, {"mode", std::string(to_string(mode))}};
        try {
            std::size_t hull_input = 0;
            TileBoundary b = compute_boundary(tile, mode, hull_input);
            entry["valid"] = true;
            entry["degenerate"] = b.degenerate;
            entry["polygon"] = boundary_to_json(b);
            if (mode == BoundaryMode::convex) entry["hull_candidates"] = hull_input;
            index.boundaries.push_back(std::move(b));
        } catch (const Error& e) {
            std::cerr << "warning: skipping tile " << tile << ": " << e.what() << '\n';
            entry["valid"] = false;
            entry["error"] = e.what();
            index.invalid.push_back(tile.string());
        }
        entries[name] = std::move(entry);
    }

    if (changed || !fs::exists(cache_path)) {
        nlohmann::json doc = {{"version", 1}, {"tiles", entries}};
        const fs::path tmp = cache_path.string() + ".tmp";
        bool written = false;
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (out) {
                out << doc.dump(1) << '\n';
                written = static_cast<bool>(out);
            }
        }
        std::error_code ec;
        if (written) fs::rename(tmp, cache_path, ec);
        if (!written || ec) {
            // A read-only tile directory only costs the warm start.
            std::cerr << "warning: cannot write boundary cache " << cache_path << '\n';
            fs::remove(tmp, ec);
        } else {
            index.cache_written = true;
        }
    }
    return index;
}

std::vector<std::string> select_tiles(std::span<const TileBoundary> boundaries, double x, double y,
                                      double buffer_m) {
    const double h = buffer_m * 0.5;
    const Box box{x - h, y - h, x + h, y + h};
    std::vector<std::string> out;
    for (const auto& b : boundaries) {
        if (polygon_intersects_box(b.polygon, box)) out.push_back(b.path);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> select_tiles(std::span<const TileBoundary> boundaries, const Footprint& footprint,
                                      double buffer_m) {
    return select_tiles(boundaries, footprint.x, footprint.y, buffer_m);
}

PointIndex::PointIndex(std::vector<PointRecord> points, double cell_size) : cell_(cell_size) {
    if (!(cell_size > 0.0)) throw Error(ErrorKind::config, "cell size must be positive");
    if (points.empty()) return;
    double min_x = points[0].x, max_x = min_x, min_y = points[0].y, max_y = min_y;
    for (const auto& p : points) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    origin_x_ = min_x;
    origin_y_ = min_y;
    cols_ = static_cast<long>(std::floor((max_x - min_x) / cell_)) + 1;
    rows_ = static_cast<long>(std::floor((max_y - min_y) / cell_)) + 1;
    const std::size_t ncells = static_cast<std::size_t>(cols_) * static_cast<std::size_t>(rows_);
    auto cell_of = [&](const PointRecord& p) {
        const long c = clamp_col(static_cast<long>(std::floor((p.x - origin_x_) / cell_)));
        const long r = clamp_row(static_cast<long>(std::floor((p.y - origin_y_) / cell_)));
        return static_cast<std::size_t>(r * cols_ + c);
    };
    std::vector<std::uint32_t> counts(ncells + 1, 0);
    for (const auto& p : points) ++counts[cell_of(p) + 1];
    for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
    cell_start_ = counts;
    points_.resize(points.size());
    for (const auto& p : points) points_[counts[cell_of(p)]++] = p;
}

std::vector<PointRecord> PointIndex::collect(const Box& box) const {
    std::vector<PointRecord> out;
    if (points_.empty()) return out;
    const long c0 = clamp_col(static_cast<long>(std::floor((box.min_x - origin_x_) / cell_)));
    const long c1 = clamp_col(static_cast<long>(std::floor((box.max_x - origin_x_) / cell_)));
    const long r0 = clamp_row(static_cast<long>(std::floor((box.min_y - origin_y_) / cell_)));
    const long r1 = clamp_row(static_cast<long>(std::floor((box.max_y - origin_y_) / cell_)));
    for (long row = r0; row <= r1; ++row) {
        const std::size_t base = static_cast<std::size_t>(row * cols_);
        for (std::uint32_t i = cell_start_[base + static_cast<std::size_t>(c0)];
             i < cell_start_[base + static_cast<std::size_t>(c1) + 1]; ++i) {
            const auto& p = points_[i];
            if (p.x >= box.min_x && p.x <= box.max_x && p.y >= box.min_y && p.y <= box.max_y) out.push_back(p);
        }
    }
    return out;
}

}  // namespace geocorrect
