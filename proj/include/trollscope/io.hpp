#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace trollscope {

/// A newline-delimited record stream. Lines are returned without the
/// terminator; a trailing "\r" is stripped as well.
class RecordSource {
public:
  virtual ~RecordSource() = default;
  virtual bool next_line(std::string& line) = 0;
};

/// In-memory source, mostly for tests and for piping generated corpora.
class StringSource final : public RecordSource {
public:
  explicit StringSource(std::string data) : data_(std::move(data)) {}
  bool next_line(std::string& line) override;

private:
  std::string data_;
  std::size_t pos_ = 0;
};

enum class Compression { None, Gzip, Zstd };

/// Detects gzip (1f 8b) and zstd (28 b5 2f fd) by magic bytes.
Compression detect_compression(std::string_view first_bytes);

/// File source with transparent gzip / zstd decompression.
/// Throws Error(StorageFailure) if the file cannot be opened or decoded.
std::unique_ptr<RecordSource> open_record_file(const std::filesystem::path& path);

/// True when the zstd runtime library could be loaded.
bool zstd_available();

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace trollscope
