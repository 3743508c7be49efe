#include "attrib/image.hpp"

#include <array>
#include <cstring>

#include "attrib/errors.hpp"
#include "attrib/io.hpp"

namespace attrib {

namespace {

// ---- inflate (RFC 1950/1951), enough for PNG: stored, fixed and dynamic
// Huffman blocks ----

class BitReader {
public:
    BitReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint32_t bits(unsigned count) {
        std::uint32_t v = 0;
        for (unsigned i = 0; i < count; ++i) v |= static_cast<std::uint32_t>(bit()) << i;
        return v;
    }

    unsigned bit() {
        if (pos_ >= size_) throw io_error("truncated deflate stream");
        const unsigned b = (data_[pos_] >> nbit_) & 1u;
        if (++nbit_ == 8) {
            nbit_ = 0;
            ++pos_;
        }
        return b;
    }

    void align_byte() {
        if (nbit_ != 0) {
            nbit_ = 0;
            ++pos_;
        }
    }

    std::uint8_t byte() {
        if (pos_ >= size_) throw io_error("truncated deflate stream");
        return data_[pos_++];
    }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    unsigned nbit_ = 0;
};

// Canonical Huffman decoder driven by per-length code counts.
struct Huffman {
    std::array<std::uint16_t, 16> count{};  // codes per bit length
    std::vector<std::uint16_t> symbols;     // symbols sorted by (length, symbol)

    void build(const std::uint8_t* lengths, std::size_t n) {
        count.fill(0);
        for (std::size_t i = 0; i < n; ++i) ++count[lengths[i]];
        count[0] = 0;
        symbols.assign(n, 0);
        std::array<std::uint16_t, 16> offs{};
        for (unsigned len = 1; len < 16; ++len) offs[len] = static_cast<std::uint16_t>(offs[len - 1] + count[len - 1]);
        for (std::size_t i = 0; i < n; ++i)
            if (lengths[i]) symbols[offs[lengths[i]]++] = static_cast<std::uint16_t>(i);
    }

    std::uint16_t decode(BitReader& br) const {
        int code = 0, first = 0, index = 0;
        for (unsigned len = 1; len < 16; ++len) {
            code |= static_cast<int>(br.bit());
            const int n = count[len];
            if (code - first < n) return symbols[static_cast<std::size_t>(index + (code - first))];
            index += n;
            first = (first + n) << 1;
            code <<= 1;
        }
        throw io_error("invalid Huffman code in deflate stream");
    }
};

constexpr std::uint16_t kLenBase[29] = {3,  4,  5,  6,  7,  8,  9,  10, 11,  13,  15,  17,  19, 23, 27,
                                        31, 35, 43, 51, 59, 67, 83, 99, 115, 131, 163, 195, 227, 258};
constexpr std::uint8_t kLenExtra[29] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2,
                                        2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0};
constexpr std::uint16_t kDistBase[30] = {1,    2,    3,    4,    5,    7,     9,     13,   17,   25,
                                         33,   49,   65,   97,   129,  193,   257,   385,  513,  769,
                                         1025, 1537, 2049, 3073, 4097, 6145,  8193,  12289, 16385, 24577};
constexpr std::uint8_t kDistExtra[30] = {0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4,  4,  5,  5,  6,
                                         6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12, 13, 13};

void inflate_block(BitReader& br, const Huffman& lit, const Huffman& dist,
                   std::vector<std::uint8_t>& out) {
    for (;;) {
        const std::uint16_t sym = lit.decode(br);
        if (sym < 256) {
            out.push_back(static_cast<std::uint8_t>(sym));
        } else if (sym == 256) {
            return;
        } else {
            if (sym > 285) throw io_error("invalid length symbol in deflate stream");
            const std::size_t len = kLenBase[sym - 257] + br.bits(kLenExtra[sym - 257]);
            const std::uint16_t dsym = dist.decode(br);
            if (dsym > 29) throw io_error("invalid distance symbol in deflate stream");
            const std::size_t d = kDistBase[dsym] + br.bits(kDistExtra[dsym]);
            if (d > out.size()) throw io_error("deflate back-reference before stream start");
            for (std::size_t i = 0; i < len; ++i) out.push_back(out[out.size() - d]);
        }
    }
}

std::uint32_t adler32(const std::uint8_t* data, std::size_t size) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < size; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

}  // namespace

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, std::size_t size) {
    if (size < 6) throw io_error("zlib stream too short");
    const std::uint8_t cmf = data[0], flg = data[1];
    if ((cmf & 0x0f) != 8) throw io_error("unsupported zlib compression method");
    if (((cmf << 8) | flg) % 31 != 0) throw io_error("corrupt zlib header");
    if (flg & 0x20) throw io_error("preset zlib dictionaries are not supported");

    BitReader br(data + 2, size - 6);
    std::vector<std::uint8_t> out;

    for (;;) {
        const unsigned final = br.bit();
        const unsigned type = br.bits(2);
        if (type == 0) {
            br.align_byte();
            const std::uint16_t len = static_cast<std::uint16_t>(br.byte() | (br.byte() << 8));
            const std::uint16_t nlen = static_cast<std::uint16_t>(br.byte() | (br.byte() << 8));
            if (static_cast<std::uint16_t>(~len) != nlen) throw io_error("corrupt stored deflate block");
            for (std::size_t i = 0; i < len; ++i) out.push_back(br.byte());
        } else if (type == 1) {
            static const Huffman fixed_lit = [] {
                std::array<std::uint8_t, 288> lens{};
                for (std::size_t i = 0; i < 144; ++i) lens[i] = 8;
                for (std::size_t i = 144; i < 256; ++i) lens[i] = 9;
                for (std::size_t i = 256; i < 280; ++i) lens[i] = 7;
                for (std::size_t i = 280; i < 288; ++i) lens[i] = 8;
                Huffman h;
                h.build(lens.data(), lens.size());
                return h;
            }();
            static const Huffman fixed_dist = [] {
                std::array<std::uint8_t, 30> lens{};
                lens.fill(5);
                Huffman h;
                h.build(lens.data(), lens.size());
                return h;
            }();
            inflate_block(br, fixed_lit, fixed_dist, out);
        } else if (type == 2) {
            const std::size_t hlit = br.bits(5) + 257;
            const std::size_t hdist = br.bits(5) + 1;
            const std::size_t hclen = br.bits(4) + 4;
            static constexpr std::uint8_t kClOrder[19] = {16, 17, 18, 0, 8,  7, 9,  6, 10, 5,
                                                          11, 4,  12, 3, 13, 2, 14, 1, 15};
            std::array<std::uint8_t, 19> cl_lens{};
            for (std::size_t i = 0; i < hclen; ++i) cl_lens[kClOrder[i]] = static_cast<std::uint8_t>(br.bits(3));
            Huffman cl;
            cl.build(cl_lens.data(), cl_lens.size());

            std::vector<std::uint8_t> lens;
            lens.reserve(hlit + hdist);
            while (lens.size() < hlit + hdist) {
                const std::uint16_t sym = cl.decode(br);
                if (sym < 16) {
                    lens.push_back(static_cast<std::uint8_t>(sym));
                } else if (sym == 16) {
                    if (lens.empty()) throw io_error("deflate code-length repeat with no previous length");
                    const std::size_t n = 3 + br.bits(2);
                    lens.insert(lens.end(), n, lens.back());
                } else if (sym == 17) {
                    lens.insert(lens.end(), 3 + br.bits(3), 0);
                } else {
                    lens.insert(lens.end(), 11 + br.bits(7), 0);
                }
            }
            if (lens.size() != hlit + hdist) throw io_error("deflate code-length table overflow");
            Huffman lit, dist;
            lit.build(lens.data(), hlit);
            dist.build(lens.data() + hlit, hdist);
            inflate_block(br, lit, dist, out);
        } else {
            throw io_error("reserved deflate block type");
        }
        if (final) break;
    }

    const std::uint32_t want = (static_cast<std::uint32_t>(data[size - 4]) << 24) |
                               (static_cast<std::uint32_t>(data[size - 3]) << 16) |
                               (static_cast<std::uint32_t>(data[size - 2]) << 8) |
                               static_cast<std::uint32_t>(data[size - 1]);
    if (adler32(out.data(), out.size()) != want) throw io_error("zlib checksum mismatch");
    return out;
}

namespace {

std::uint32_t be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

std::uint8_t paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
    if (pb <= pc) return static_cast<std::uint8_t>(b);
    return static_cast<std::uint8_t>(c);
}

}  // namespace

Image8 decode_png(const std::vector<std::uint8_t>& bytes) {
    static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSig, 8) != 0)
        throw io_error("not a PNG file");

    Image8 img;
    std::vector<std::uint8_t> idat;
    bool have_ihdr = false, have_iend = false;
    std::size_t pos = 8;
    while (pos + 8 <= bytes.size() && !have_iend) {
        const std::uint32_t len = be32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw io_error("truncated PNG chunk");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* data = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw io_error("malformed IHDR chunk");
            img.width = be32(data);
            img.height = be32(data + 4);
            const unsigned depth = data[8], color = data[9], interlace = data[12];
            if (depth != 8) throw io_error("only 8-bit PNGs are supported");
            if (interlace != 0) throw io_error("interlaced PNGs are not supported");
            switch (color) {
                case 0: img.channels = 1; break;
                case 2: img.channels = 3; break;
                case 4: img.channels = 2; break;
                case 6: img.channels = 4; break;
                default: throw io_error("unsupported PNG color type " + std::to_string(color));
            }
            have_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            have_iend = true;
        }
        pos += 12 + len;  // length + type + data + crc
    }
    if (!have_ihdr || idat.empty()) throw io_error("PNG missing IHDR or IDAT");
    if (img.width == 0 || img.height == 0) throw io_error("PNG has zero dimension");

    const std::vector<std::uint8_t> raw = zlib_inflate(idat.data(), idat.size());
    const std::size_t bpp = img.channels;
    const std::size_t stride = img.width * bpp;
    if (raw.size() != img.height * (stride + 1)) throw io_error("PNG pixel payload size mismatch");

    img.pixels.assign(img.height * stride, 0);
    for (std::size_t y = 0; y < img.height; ++y) {
        const std::uint8_t filter = raw[y * (stride + 1)];
        const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
        std::uint8_t* dst = img.pixels.data() + y * stride;
        const std::uint8_t* up = y > 0 ? dst - stride : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= bpp ? dst[i - bpp] : 0;
            const int b = up ? up[i] : 0;
            const int c = (up && i >= bpp) ? up[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw io_error("unknown PNG filter type " + std::to_string(filter));
            }
            dst[i] = static_cast<std::uint8_t>(v & 0xff);
        }
    }
    return img;
}

Image8 load_png(const std::filesystem::path& path) {
    return decode_png(read_file_bytes(path));
}

Tensor image_to_tensor(const Image8& img, const std::vector<double>& mean,
                       const std::vector<double>& stddev) {
    // Alpha (the last channel of 2- and 4-channel images) is dropped.
    const std::size_t channels = img.channels == 2 ? 1 : img.channels == 4 ? 3 : img.channels;
    const auto chan_stat = [](const std::vector<double>& v, std::size_t c, double fallback) {
        if (v.empty()) return fallback;
        return v.size() == 1 ? v[0] : v.at(c);
    };
    std::vector<float> data(channels * img.height * img.width);
    for (std::size_t c = 0; c < channels; ++c) {
        const double m = chan_stat(mean, c, 0.0);
        const double s = chan_stat(stddev, c, 1.0);
        if (s == 0.0) throw config_error("normalization std must be non-zero");
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width; ++x) {
                const std::uint8_t px = img.pixels[(y * img.width + x) * img.channels + c];
                data[(c * img.height + y) * img.width + x] =
                    static_cast<float>((static_cast<double>(px) / 255.0 - m) / s);
            }
    }
    return Tensor({channels, img.height, img.width}, std::move(data));
}

}  // namespace attrib
