#include "cli/raster_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cloudheight/errors.hpp"

namespace cloudheight::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, mode);
    if (!out)
        throw IoError("cannot write " + path.string());
    return out;
}

[[noreturn]] void pgm_fail(const fs::path& path, std::size_t offset, const std::string& what)
{
    throw IoError(path.string() + ": byte " + std::to_string(offset) + ": " + what);
}

// Header token reader; '#' starts a comment that runs to the end of the line.
struct HeaderCursor {
    const std::string& data;
    const fs::path& path;
    std::size_t pos = 0;

    void skip_space()
    {
        while (pos < data.size()) {
            const auto ch = static_cast<unsigned char>(data[pos]);
            if (ch == '#') {
                while (pos < data.size() && data[pos] != '\n')
                    ++pos;
            } else if (std::isspace(ch)) {
                ++pos;
            } else {
                break;
            }
        }
    }

    long number(const char* what)
    {
        skip_space();
        const std::size_t start = pos;
        long value = 0;
        const auto [ptr, ec] = std::from_chars(data.data() + pos, data.data() + data.size(), value);
        if (ec != std::errc{} || value <= 0)
            pgm_fail(path, start, std::string("expected positive ") + what);
        pos = static_cast<std::size_t>(ptr - data.data());
        return value;
    }
};

}  // namespace

std::string sidecar_path(const fs::path& csv) { return csv.string() + ".json"; }

Raster load_pgm(const fs::path& path, double pitch)
{
    const std::string data = read_file(path);
    if (data.size() < 2 || data[0] != 'P' || data[1] != '5')
        pgm_fail(path, 0, "not a binary PGM (missing P5 magic)");
    HeaderCursor cur{data, path, 2};
    const long cols = cur.number("width");
    const long rows = cur.number("height");
    const long maxval = cur.number("maxval");
    if (maxval > 65535)
        pgm_fail(path, cur.pos, "maxval above 65535");
    if (cur.pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[cur.pos])))
        pgm_fail(path, cur.pos, "missing whitespace after maxval");
    ++cur.pos;

    const std::size_t bytes = maxval > 255 ? 2 : 1;
    const auto count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    const std::size_t need = count * bytes;
    if (data.size() - cur.pos < need)
        pgm_fail(path, data.size(), "truncated pixel data (expected " + std::to_string(need) + " bytes from offset " +
                                        std::to_string(cur.pos) + ")");

    Raster out(rows, cols, pitch);
    const auto* px = reinterpret_cast<const unsigned char*>(data.data() + cur.pos);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned v = bytes == 2 ? (static_cast<unsigned>(px[2 * i]) << 8) | px[2 * i + 1] : px[i];
        if (v > static_cast<unsigned>(maxval))
            pgm_fail(path, cur.pos + i * bytes, "gray level above maxval");
        out.values[i] = std::log(std::max(static_cast<double>(v) / static_cast<double>(maxval), kReflectanceFloor));
    }
    return out;
}

Raster load_csv(const fs::path& path)
{
    const std::string side = sidecar_path(path);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_file(side));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(side + ": byte " + std::to_string(e.byte) + ": malformed sidecar JSON");
    }
    long rows = 0;
    long cols = 0;
    double pitch = kMisrPitchMeters;
    try {
        rows = meta.at("rows").get<long>();
        cols = meta.at("cols").get<long>();
        pitch = meta.value("pitch_m", kMisrPitchMeters);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(side + ": " + e.what());
    }
    if (rows <= 0 || cols <= 0 || !(pitch > 0.0))
        throw IoError(side + ": rows, cols and pitch_m must be positive");

    std::istringstream in(read_file(path));
    Raster out(rows, cols, pitch);
    std::string line;
    long r = 0;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        if (r >= rows)
            throw IoError(path.string() + ": line " + std::to_string(line_no) + ": more than " + std::to_string(rows) +
                          " rows");
        long c = 0;
        std::size_t pos = 0;
        while (true) {
            const std::size_t end = std::min(line.find(',', pos), line.size());
            std::string field = line.substr(pos, end - pos);
            field.erase(0, field.find_first_not_of(" \t"));
            field.erase(field.find_last_not_of(" \t") + 1);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            const auto where = path.string() + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1);
            if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
                throw IoError(where + ": not a number");
            if (!std::isfinite(v))
                throw IoError(where + ": non-finite value");
            if (c >= cols)
                throw IoError(where + ": more than " + std::to_string(cols) + " columns");
            out(r, c++) = std::log(std::max(v, kReflectanceFloor));
            if (end == line.size())
                break;
            pos = end + 1;
        }
        if (c != cols)
            throw IoError(path.string() + ": line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                          " columns, found " + std::to_string(c));
        ++r;
    }
    if (r != rows)
        throw IoError(path.string() + ": line " + std::to_string(line_no + 1) + ": expected " + std::to_string(rows) +
                      " rows, found " + std::to_string(r));
    return out;
}

Raster load_raster(const fs::path& path, double pitch)
{
    const auto ext = path.extension().string();
    if (ext == ".pgm")
        return load_pgm(path, pitch);
    if (ext == ".csv")
        return load_csv(path);
    throw IoError(path.string() + ": unsupported raster format (expected .pgm or .csv)");
}

void save_csv(const Raster& raster, const fs::path& path)
{
    validate(raster);
    {
        auto out = open_out(path);
        char buf[32];
        for (long r = 0; r < raster.rows; ++r) {
            for (long c = 0; c < raster.cols; ++c) {
                const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, std::exp(raster(r, c)));
                if (c > 0)
                    out << ',';
                out.write(buf, ptr - buf);
            }
            out << '\n';
        }
        if (!out)
            throw IoError("failed writing " + path.string());
    }
    auto side = open_out(sidecar_path(path));
    side << nlohmann::json{{"rows", raster.rows}, {"cols", raster.cols}, {"pitch_m", raster.pitch}}.dump() << '\n';
}

void write_gray16(const fs::path& path, long rows, long cols, const std::vector<std::uint16_t>& levels)
{
    if (levels.size() != static_cast<std::size_t>(rows * cols))
        throw IoError("gray image size mismatch for " + path.string());
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out << "P5\n" << cols << ' ' << rows << "\n65535\n";
    for (const auto v : levels) {
        const char be[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xFF)};
        out.write(be, 2);
    }
    if (!out)
        throw IoError("failed writing " + path.string());
}

void save_pgm(const Raster& raster, const fs::path& path)
{
    validate(raster);
    std::vector<std::uint16_t> levels(raster.size());
    for (std::size_t i = 0; i < raster.size(); ++i)
        levels[i] = static_cast<std::uint16_t>(std::lround(std::clamp(std::exp(raster.values[i]), 0.0, 1.0) * 65535.0));
    write_gray16(path, raster.rows, raster.cols, levels);
}

void save_raster(const Raster& raster, const fs::path& path)
{
    const auto ext = path.extension().string();
    if (ext == ".pgm")
        return save_pgm(raster, path);
    if (ext == ".csv")
        return save_csv(raster, path);
    throw IoError(path.string() + ": unsupported raster format (expected .pgm or .csv)");
}

std::vector<std::uint16_t> heat_levels(const std::vector<double>& values)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const double v : values) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    std::vector<std::uint16_t> out(values.size(), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            continue;
        const double t = hi > lo ? (values[i] - lo) / (hi - lo) : 1.0;
        out[i] = static_cast<std::uint16_t>(1 + std::lround(t * 65534.0));
    }
    return out;
}

}  // namespace cloudheight::cli
