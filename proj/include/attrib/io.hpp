#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attrib/tensor.hpp"

namespace attrib {

// Tensor file format: 8-byte magic "TSR1\0\0\0\0", u32 rank, rank x u32 dims,
// then the f32 payload. Everything little-endian.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> tensor_to_bytes(const Tensor& t);
Tensor tensor_from_bytes(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");

/// Write-temp-then-rename so concurrent runs never observe partial files.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& contents);

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);

/// Minimal CSV accumulator: header row first, fields escaped when needed.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(const std::vector<std::string>& fields);
    const std::string& str() const { return buf_; }
    void save(const std::filesystem::path& path) const { write_file_atomic(path, buf_); }

private:
    std::string buf_;
    std::size_t columns_;
};

std::string format_double(double v);

}  // namespace attrib
