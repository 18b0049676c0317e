#include <filagauge/acquisition.hpp>
#include <filagauge/log.hpp>

#include <nlohmann/json.hpp>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace filagauge {

namespace {

using json = nlohmann::json;

// Arithmetic channel mean rounded half-up. s/3 never lands on .5, so this is
// plain nearest rounding in disguise.
inline std::uint8_t gray_from_rgb(unsigned r, unsigned g, unsigned b) {
    return static_cast<std::uint8_t>((2u * (r + g + b) + 3u) / 6u);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_png_signature(std::FILE* f) {
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f) != 8) {
        return false;
    }
    return png_sig_cmp(sig, 0, 8) == 0;
}

ImageU8 read_png_file(const std::filesystem::path& path, std::FILE* f) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) {
        throw Error(Errc::IoFailure, "libpng init failed");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error(Errc::IoFailure, "libpng info init failed");
    }
    // Declared ahead of setjmp so the throw below unwinds them.
    std::vector<unsigned char> raster;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(Errc::FileUnreadable, "corrupt PNG: " + path.string());
    }

    png_init_io(png, f);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(Errc::UnsupportedFormat, "16-bit PNG not supported: " + path.string());
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(png);
    }
    png_read_update_info(png, info);

    const png_size_t rowbytes = png_get_rowbytes(png, info);
    const int channels = png_get_channels(png, info);
    raster.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) {
        rows[r] = raster.data() + r * rowbytes;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageU8 image(height, width);
    for (png_uint_32 r = 0; r < height; ++r) {
        const unsigned char* src = raster.data() + r * rowbytes;
        for (png_uint_32 c = 0; c < width; ++c) {
            const unsigned char* px = src + c * channels;
            switch (channels) {
            case 1:
            case 2:  // gray + alpha; alpha ignored
                image(r, c) = px[0];
                break;
            default: // RGB / RGBA
                image(r, c) = gray_from_rgb(px[0], px[1], px[2]);
                break;
            }
        }
    }
    return image;
}

// Binary PGM (P5), maxval <= 255.
ImageU8 read_pgm_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::FileUnreadable, "cannot open: " + path.string());
    }

    std::string magic;
    in >> magic;
    if (magic != "P5") {
        throw Error(Errc::UnsupportedFormat, "not a binary PGM (P5): " + path.string());
    }

    auto next_token = [&in, &path]() -> long {
        // Skip whitespace and '#' comment lines between header fields.
        int ch = in.peek();
        while (ch != EOF && (std::isspace(ch) || ch == '#')) {
            if (ch == '#') {
                std::string line;
                std::getline(in, line);
            } else {
                in.get();
            }
            ch = in.peek();
        }
        long value = -1;
        in >> value;
        if (!in || value < 0) {
            throw Error(Errc::FileUnreadable, "truncated PGM header: " + path.string());
        }
        return value;
    };

    const long width = next_token();
    const long height = next_token();
    const long maxval = next_token();
    if (width < 1 || height < 1) {
        throw Error(Errc::FileUnreadable, "bad PGM dimensions: " + path.string());
    }
    if (maxval > 255) {
        throw Error(Errc::UnsupportedFormat, "16-bit PGM not supported: " + path.string());
    }
    in.get(); // single whitespace after maxval

    ImageU8 image(height, width);
    in.read(reinterpret_cast<char*>(image.data()), width * height);
    if (in.gcount() != width * height) {
        throw Error(Errc::FileUnreadable, "truncated PGM data: " + path.string());
    }
    return image;
}

long numeric_suffix(const std::string& stem) {
    auto end = stem.size();
    auto begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) {
        --begin;
    }
    if (begin == end) {
        return -1;
    }
    // Cap very long digit runs instead of overflowing.
    const std::string digits = stem.substr(begin, std::min<std::size_t>(end - begin, 18));
    return std::stol(digits);
}

Rect rect_from_json(const json& j, const std::string& key) {
    const auto& r = j.at(key);
    return Rect{r.at("x").get<int>(), r.at("y").get<int>(), r.at("w").get<int>(),
                r.at("h").get<int>()};
}

json rect_to_json(const Rect& r) {
    return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

} // namespace

void validate(const RigConfig& rig) {
    const Rect* rois[] = {&rig.roi_main, &rig.roi_upper, &rig.roi_lower};
    const char* names[] = {"roi_main", "roi_upper", "roi_lower"};
    for (int i = 0; i < 3; ++i) {
        if (rois[i]->w < 1 || rois[i]->h < 1 || rois[i]->x < 0 || rois[i]->y < 0) {
            throw Error(Errc::InvalidArgument, std::string(names[i]) + " must have positive size");
        }
    }
    if (rig.roi_upper.w != rig.roi_main.w || rig.roi_lower.w != rig.roi_main.w) {
        throw Error(Errc::InvalidArgument, "all ROIs must share the same width N");
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            if (rois[i]->intersects(*rois[j])) {
                throw Error(Errc::InvalidArgument,
                            std::string(names[i]) + " overlaps " + names[j]);
            }
        }
    }
    if (!(rig.gradient_threshold > 0.0)) {
        throw Error(Errc::InvalidArgument, "gradient_threshold must be > 0");
    }
    if (!(rig.nominal_diameter_mm > 0.0)) {
        throw Error(Errc::InvalidArgument, "nominal_diameter_mm must be > 0");
    }
    if (!(rig.tolerance_mm > 0.0)) {
        throw Error(Errc::InvalidArgument, "tolerance_mm must be > 0");
    }
    if (!(rig.feed_rate_mm_s > 0.0)) {
        throw Error(Errc::InvalidArgument, "feed_rate_mm_s must be > 0");
    }
    if (!(rig.period_s > 0.0)) {
        throw Error(Errc::InvalidArgument, "period_s must be > 0");
    }
}

void validate(const RigConfig& rig, int frame_w, int frame_h) {
    validate(rig);
    const Rect* rois[] = {&rig.roi_main, &rig.roi_upper, &rig.roi_lower};
    const char* names[] = {"roi_main", "roi_upper", "roi_lower"};
    for (int i = 0; i < 3; ++i) {
        if (!rois[i]->contains_within(frame_w, frame_h)) {
            throw Error(Errc::RoiOutOfBounds,
                        std::string(names[i]) + " exceeds the frame bounds");
        }
    }
}

RigConfig rig_config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("rig config JSON: ") + e.what());
    }
    try {
        RigConfig rig;
        rig.roi_main = rect_from_json(j, "roi_main");
        rig.roi_upper = rect_from_json(j, "roi_upper");
        rig.roi_lower = rect_from_json(j, "roi_lower");
        rig.gradient_threshold = j.at("gradient_threshold").get<double>();
        rig.nominal_diameter_mm = j.at("nominal_diameter_mm").get<double>();
        rig.tolerance_mm = j.at("tolerance_mm").get<double>();
        rig.feed_rate_mm_s = j.at("feed_rate_mm_s").get<double>();
        rig.period_s = j.at("period_s").get<double>();
        validate(rig);
        return rig;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("rig config JSON: ") + e.what());
    }
}

RigConfig load_rig_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::FileUnreadable, "cannot open rig config: " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return rig_config_from_json_text(buffer.str());
}

std::string rig_config_to_json_text(const RigConfig& rig) {
    json j{{"roi_main", rect_to_json(rig.roi_main)},
           {"roi_upper", rect_to_json(rig.roi_upper)},
           {"roi_lower", rect_to_json(rig.roi_lower)},
           {"gradient_threshold", rig.gradient_threshold},
           {"nominal_diameter_mm", rig.nominal_diameter_mm},
           {"tolerance_mm", rig.tolerance_mm},
           {"feed_rate_mm_s", rig.feed_rate_mm_s},
           {"period_s", rig.period_s}};
    return j.dump(2) + "\n";
}

ImageU8 read_raster(const std::filesystem::path& path) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) {
        throw Error(Errc::FileUnreadable, "missing file: " + path.string());
    }
    if (size == 0) {
        throw Error(Errc::FileUnreadable, "zero-byte file: " + path.string());
    }

    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) {
        throw Error(Errc::FileUnreadable, "cannot open: " + path.string());
    }
    if (has_png_signature(f.get())) {
        return read_png_file(path, f.get());
    }
    f.reset();

    std::ifstream probe(path, std::ios::binary);
    char magic[2] = {0, 0};
    probe.read(magic, 2);
    if (magic[0] == 'P' && magic[1] == '5') {
        return read_pgm_file(path);
    }
    throw Error(Errc::UnsupportedFormat, "not a PNG or binary PGM: " + path.string());
}

void write_pgm(const std::filesystem::path& path, const ImageU8& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(Errc::IoFailure, "cannot write: " + path.string());
    }
    out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data()), image.size());
    if (!out) {
        throw Error(Errc::IoFailure, "short write: " + path.string());
    }
}

void write_png(const std::filesystem::path& path, const ImageU8& image) {
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) {
        throw Error(Errc::IoFailure, "cannot write: " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) {
        throw Error(Errc::IoFailure, "libpng init failed");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error(Errc::IoFailure, "libpng info init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(Errc::IoFailure, "PNG encode failed: " + path.string());
    }

    png_init_io(png, f.get());
    png_set_IHDR(png, info, image.cols(), image.rows(), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (Eigen::Index r = 0; r < image.rows(); ++r) {
        png_write_row(png, const_cast<png_bytep>(image.data() + r * image.cols()));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

bool has_raster_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".pgm";
}

Frame load_frame(const std::filesystem::path& path, long index, double period_s) {
    Frame frame;
    frame.pixels = read_raster(path);
    frame.index = index;
    frame.period_s = period_s;
    return frame;
}

std::vector<std::filesystem::path> scan_sequence(const std::filesystem::path& directory) {
    if (!std::filesystem::is_directory(directory)) {
        throw Error(Errc::FileUnreadable, "not a directory: " + directory.string());
    }

    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        if (entry.is_regular_file() && has_raster_extension(entry.path())) {
            paths.push_back(entry.path());
        }
    }
    if (paths.empty()) {
        throw Error(Errc::EmptySequence, "no decodable frames in " + directory.string());
    }

    std::sort(paths.begin(), paths.end(),
              [](const std::filesystem::path& a, const std::filesystem::path& b) {
                  const long na = numeric_suffix(a.stem().string());
                  const long nb = numeric_suffix(b.stem().string());
                  if (na != nb) return na < nb;
                  return a.filename().string() < b.filename().string();
              });
    return paths;
}

ImageU8 extract_roi(const Frame& frame, const Rect& roi) {
    if (!roi.contains_within(frame.width(), frame.height())) {
        throw Error(Errc::RoiOutOfBounds, "roi (" + std::to_string(roi.x) + "," +
                                              std::to_string(roi.y) + "," + std::to_string(roi.w) +
                                              "," + std::to_string(roi.h) + ") outside " +
                                              std::to_string(frame.width()) + "x" +
                                              std::to_string(frame.height()));
    }
    return frame.pixels.block(roi.y, roi.x, roi.h, roi.w);
}

} // namespace filagauge
