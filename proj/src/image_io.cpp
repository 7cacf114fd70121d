#include "turbres/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "turbres/errors.hpp"

namespace turbres {

namespace {

std::string lower_ext(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

uint8_t quantize8(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<uint8_t>(std::lround(c * 255.0));
}

uint16_t quantize16(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<uint16_t>(std::lround(c * 65535.0));
}

// ---- PGM ----

// Reads the next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int pgm_int_token(std::istream& in, const std::string& what) {
    const std::string tok = pgm_token(in);
    if (tok.empty()) throw io_error("corrupt PGM header: missing " + what);
    try {
        size_t pos = 0;
        const int value = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return value;
    } catch (const std::exception&) {
        throw io_error("corrupt PGM header: bad " + what + " '" + tok + "'");
    }
}

ScalarImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open file: " + path);
    const std::string magic = pgm_token(in);
    if (magic != "P2" && magic != "P5") {
        if (magic == "P3" || magic == "P6") throw io_error("unsupported format (color PPM): " + path);
        throw io_error("corrupt PGM header: bad magic '" + magic + "' in " + path);
    }
    const int width = pgm_int_token(in, "width");
    const int height = pgm_int_token(in, "height");
    const int maxval = pgm_int_token(in, "maxval");
    if (width < 1 || height < 1) throw io_error("corrupt PGM header: bad dimensions in " + path);
    if (maxval != 255 && maxval != 65535)
        throw io_error("unsupported format (PGM maxval " + std::to_string(maxval) + "): " + path);

    ScalarImage img(width, height);
    const size_t n = img.pixel_count();
    const double scale = 1.0 / maxval;
    if (magic == "P2") {
        for (size_t i = 0; i < n; ++i) {
            const int value = pgm_int_token(in, "pixel");
            if (value < 0 || value > maxval) throw io_error("PGM pixel out of range in " + path);
            img.data[i] = value * scale;
        }
    } else {
        // The maxval token is followed by exactly one whitespace byte.
        if (maxval == 255) {
            std::vector<uint8_t> raw(n);
            in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
            if (static_cast<size_t>(in.gcount()) != n) throw io_error("truncated PGM data in " + path);
            for (size_t i = 0; i < n; ++i) img.data[i] = raw[i] * scale;
        } else {
            std::vector<uint8_t> raw(n * 2);
            in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
            if (static_cast<size_t>(in.gcount()) != raw.size())
                throw io_error("truncated PGM data in " + path);
            for (size_t i = 0; i < n; ++i) {
                const uint16_t value = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
                img.data[i] = value * scale;
            }
        }
    }
    return img;
}

void save_pgm8(const ScalarImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write file: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> raw(img.pixel_count());
    for (size_t i = 0; i < raw.size(); ++i) raw[i] = quantize8(img.data[i]);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw io_error("write failed: " + path);
}

// ---- PNG ----

struct PngReadCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadCtx() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

ScalarImage load_png(const std::string& path) {
    PngReadCtx ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw io_error("cannot open file: " + path);

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw io_error("corrupt PNG header: " + path);

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw io_error("libpng init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw io_error("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw io_error("corrupt PNG data: " + path);

    png_init_io(ctx.png, ctx.fp);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    const png_uint_32 width = png_get_image_width(ctx.png, ctx.info);
    const png_uint_32 height = png_get_image_height(ctx.png, ctx.info);
    const int color_type = png_get_color_type(ctx.png, ctx.info);
    int bit_depth = png_get_bit_depth(ctx.png, ctx.info);

    if (color_type != PNG_COLOR_TYPE_GRAY)
        throw io_error("unsupported format (PNG must be grayscale): " + path);
    if (bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(ctx.png);
        bit_depth = 8;
    }
    png_read_update_info(ctx.png, ctx.info);

    ScalarImage img(static_cast<int>(width), static_cast<int>(height));
    const size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
    std::vector<uint8_t> buffer(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);

    if (bit_depth == 8) {
        for (png_uint_32 y = 0; y < height; ++y)
            for (png_uint_32 x = 0; x < width; ++x)
                img.at(static_cast<int>(x), static_cast<int>(y)) = rows[y][x] / 255.0;
    } else {
        // PNG stores 16-bit samples big-endian.
        for (png_uint_32 y = 0; y < height; ++y) {
            for (png_uint_32 x = 0; x < width; ++x) {
                const uint16_t value =
                    static_cast<uint16_t>((rows[y][2 * x] << 8) | rows[y][2 * x + 1]);
                img.at(static_cast<int>(x), static_cast<int>(y)) = value / 65535.0;
            }
        }
    }
    return img;
}

struct PngWriteCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngWriteCtx() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

void save_png8(const ScalarImage& img, const std::string& path) {
    PngWriteCtx ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    if (!ctx.fp) throw io_error("cannot write file: " + path);
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw io_error("libpng init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw io_error("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw io_error("PNG write failed: " + path);

    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);

    std::vector<uint8_t> row(static_cast<size_t>(img.width));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) row[static_cast<size_t>(x)] = quantize8(img.at(x, y));
        png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
}

// ---- little-endian scalar I/O for the flow format ----

void put_u32le(std::ostream& out, uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

uint32_t get_u32le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    return static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
           (static_cast<uint32_t>(bytes[2]) << 16) | (static_cast<uint32_t>(bytes[3]) << 24);
}

void put_f32le(std::ostream& out, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32le(out, bits);
}

float get_f32le(std::istream& in) {
    const uint32_t bits = get_u32le(in);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

constexpr float kFlowMagic = 202021.25f;  // spells "PIEH" in little-endian bytes

}  // namespace

ScalarImage load_image(const std::string& path) {
    if (!std::filesystem::exists(path)) throw io_error("file not found: " + path);
    const std::string ext = lower_ext(path);
    if (ext == ".pgm") return load_pgm(path);
    if (ext == ".png") return load_png(path);
    throw io_error("unsupported format (extension '" + ext + "'): " + path);
}

void save_image(const ScalarImage& img, const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".pgm") {
        save_pgm8(img, path);
    } else if (ext == ".png") {
        save_png8(img, path);
    } else {
        throw io_error("unsupported format (extension '" + ext + "'): " + path);
    }
}

void save_pgm16(const ScalarImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write file: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n65535\n";
    std::vector<uint8_t> raw(img.pixel_count() * 2);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        const uint16_t q = quantize16(img.data[i]);
        raw[2 * i] = static_cast<uint8_t>(q >> 8);
        raw[2 * i + 1] = static_cast<uint8_t>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw io_error("write failed: " + path);
}

void write_flow_field(const VectorField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write file: " + path);
    put_f32le(out, kFlowMagic);
    put_u32le(out, static_cast<uint32_t>(field.width));
    put_u32le(out, static_cast<uint32_t>(field.height));
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            put_f32le(out, static_cast<float>(field.ux(x, y)));
            put_f32le(out, static_cast<float>(field.vy(x, y)));
        }
    }
    if (!out) throw io_error("write failed: " + path);
}

VectorField read_flow_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("file not found: " + path);
    const float magic = get_f32le(in);
    if (!in || magic != kFlowMagic) throw io_error("corrupt flow file (bad magic): " + path);
    const int width = static_cast<int>(get_u32le(in));
    const int height = static_cast<int>(get_u32le(in));
    if (!in || width < 1 || height < 1 || width > 1 << 20 || height > 1 << 20)
        throw io_error("corrupt flow file (bad dimensions): " + path);
    VectorField field(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            field.ux(x, y) = get_f32le(in);
            field.vy(x, y) = get_f32le(in);
        }
    }
    if (!in) throw io_error("truncated flow file: " + path);
    return field;
}

void write_text_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw io_error("cannot write file: " + tmp);
        out << content;
        if (!out) throw io_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace turbres
