#include "attrib/io.hpp"

#include <array>
#include <atomic>
#include <cstring>
#include <fstream>
#include <sstream>

namespace attrib {

namespace {

constexpr std::array<std::uint8_t, 8> kTensorMagic = {'T', 'S', 'R', '1', 0, 0, 0, 0};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> tensor_to_bytes(const Tensor& t) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + 4 + 4 * t.rank() + 4 * t.size());
    out.insert(out.end(), kTensorMagic.begin(), kTensorMagic.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.data()) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(out, bits);
    }
    return out;
}

Tensor tensor_from_bytes(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (bytes.size() < 12 || !std::equal(kTensorMagic.begin(), kTensorMagic.end(), bytes.begin()))
        throw io_error("not a tensor file (bad magic): " + origin);
    const std::uint32_t rank = get_u32(bytes.data() + 8);
    if (rank == 0 || rank > 8) throw io_error("tensor rank out of range in " + origin);
    if (bytes.size() < 12 + 4ull * rank) throw io_error("truncated tensor header in " + origin);
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        shape[i] = get_u32(bytes.data() + 12 + 4 * i);
        if (shape[i] == 0) throw io_error("zero dimension in tensor file " + origin);
        count *= shape[i];
    }
    const std::size_t payload_off = 12 + 4ull * rank;
    if (bytes.size() != payload_off + 4ull * count)
        throw io_error("tensor payload size mismatch in " + origin);
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32(bytes.data() + payload_off + 4 * i);
        std::memcpy(&data[i], &bits, 4);
    }
    return Tensor(std::move(shape), std::move(data));
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
    write_file_atomic(path, tensor_to_bytes(t));
}

Tensor read_tensor(const std::filesystem::path& path) {
    return tensor_from_bytes(read_file_bytes(path), path.string());
}

namespace {

void write_atomic_impl(const std::filesystem::path& path, const void* data, std::size_t size) {
    static std::atomic<std::uint64_t> counter{0};
    const auto tmp = path.parent_path() /
                     (path.filename().string() + ".tmp." + std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open for writing: " + tmp.string());
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw io_error("rename failed for " + path.string() + ": " + ec.message());
    }
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    write_atomic_impl(path, contents.data(), contents.size());
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& contents) {
    write_atomic_impl(path, contents.data(), contents.size());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    const std::string s = read_file(path);
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    add_row(header);
}

void CsvWriter::add_row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_ && columns_ != 0)
        throw config_error("csv row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(columns_));
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) buf_ += ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            buf_ += '"';
            for (char c : f) {
                if (c == '"') buf_ += '"';
                buf_ += c;
            }
            buf_ += '"';
        } else {
            buf_ += f;
        }
    }
    buf_ += '\n';
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace attrib
