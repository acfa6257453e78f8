#include "trollscope/io.hpp"

#include "trollscope/error.hpp"

#include <dlfcn.h>
#include <zlib.h>

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

namespace trollscope {

bool StringSource::next_line(std::string& line) {
  if (pos_ >= data_.size()) return false;
  std::size_t end = data_.find('\n', pos_);
  if (end == std::string::npos) end = data_.size();
  line.assign(data_, pos_, end - pos_);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  pos_ = end + 1;
  return true;
}

Compression detect_compression(std::string_view b) {
  if (b.size() >= 2 && static_cast<unsigned char>(b[0]) == 0x1f &&
      static_cast<unsigned char>(b[1]) == 0x8b)
    return Compression::Gzip;
  if (b.size() >= 4 && static_cast<unsigned char>(b[0]) == 0x28 &&
      static_cast<unsigned char>(b[1]) == 0xb5 && static_cast<unsigned char>(b[2]) == 0x2f &&
      static_cast<unsigned char>(b[3]) == 0xfd)
    return Compression::Zstd;
  return Compression::None;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

class ByteSource {
public:
  virtual ~ByteSource() = default;
  // Returns 0 at end of stream.
  virtual std::size_t read(char* out, std::size_t n) = 0;
};

class RawBytes final : public ByteSource {
public:
  explicit RawBytes(FilePtr f) : f_(std::move(f)) {}
  std::size_t read(char* out, std::size_t n) override {
    std::size_t got = std::fread(out, 1, n, f_.get());
    if (got == 0 && std::ferror(f_.get())) throw Error(ErrorCode::StorageFailure, "read failed");
    return got;
  }

private:
  FilePtr f_;
};

class GzipBytes final : public ByteSource {
public:
  explicit GzipBytes(FilePtr f) : f_(std::move(f)) {
    std::memset(&zs_, 0, sizeof zs_);
    if (inflateInit2(&zs_, 15 + 32) != Z_OK) throw Error(ErrorCode::StorageFailure, "inflateInit failed");
  }
  ~GzipBytes() override { inflateEnd(&zs_); }

  std::size_t read(char* out, std::size_t n) override {
    zs_.next_out = reinterpret_cast<Bytef*>(out);
    zs_.avail_out = static_cast<uInt>(n);
    while (zs_.avail_out == n) {
      if (zs_.avail_in == 0) {
        std::size_t got = std::fread(in_.data(), 1, in_.size(), f_.get());
        if (got == 0) {
          if (std::ferror(f_.get())) throw Error(ErrorCode::StorageFailure, "read failed");
          break;
        }
        zs_.next_in = reinterpret_cast<Bytef*>(in_.data());
        zs_.avail_in = static_cast<uInt>(got);
      }
      int rc = inflate(&zs_, Z_NO_FLUSH);
      if (rc == Z_STREAM_END) {
        // Concatenated gzip members are legal; keep going.
        if (inflateReset(&zs_) != Z_OK) throw Error(ErrorCode::StorageFailure, "gzip reset failed");
      } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
        throw Error(ErrorCode::StorageFailure, "gzip stream corrupt");
      }
    }
    return n - zs_.avail_out;
  }

private:
  FilePtr f_;
  z_stream zs_;
  std::array<char, 1 << 16> in_{};
};

// Minimal slice of the stable libzstd streaming ABI, resolved at runtime.
struct ZstdApi {
  struct InBuffer {
    const void* src;
    std::size_t size;
    std::size_t pos;
  };
  struct OutBuffer {
    void* dst;
    std::size_t size;
    std::size_t pos;
  };
  using CreateFn = void* (*)();
  using FreeFn = std::size_t (*)(void*);
  using InitFn = std::size_t (*)(void*);
  using DecompressFn = std::size_t (*)(void*, OutBuffer*, InBuffer*);
  using IsErrorFn = unsigned (*)(std::size_t);
  using SetParamFn = std::size_t (*)(void*, int, int);

  CreateFn create = nullptr;
  FreeFn destroy = nullptr;
  InitFn init = nullptr;
  DecompressFn decompress = nullptr;
  IsErrorFn is_error = nullptr;
  SetParamFn set_param = nullptr;

  static const ZstdApi* get() {
    static const ZstdApi api = [] {
      ZstdApi a;
      void* h = dlopen("libzstd.so.1", RTLD_NOW | RTLD_LOCAL);
      if (!h) h = dlopen("libzstd.so", RTLD_NOW | RTLD_LOCAL);
      if (!h) return a;
      a.create = reinterpret_cast<CreateFn>(dlsym(h, "ZSTD_createDStream"));
      a.destroy = reinterpret_cast<FreeFn>(dlsym(h, "ZSTD_freeDStream"));
      a.init = reinterpret_cast<InitFn>(dlsym(h, "ZSTD_initDStream"));
      a.decompress = reinterpret_cast<DecompressFn>(dlsym(h, "ZSTD_decompressStream"));
      a.is_error = reinterpret_cast<IsErrorFn>(dlsym(h, "ZSTD_isError"));
      a.set_param = reinterpret_cast<SetParamFn>(dlsym(h, "ZSTD_DCtx_setParameter"));
      return a;
    }();
    return api.create && api.destroy && api.init && api.decompress && api.is_error ? &api : nullptr;
  }
};

class ZstdBytes final : public ByteSource {
public:
  explicit ZstdBytes(FilePtr f) : f_(std::move(f)), api_(ZstdApi::get()) {
    if (!api_) throw Error(ErrorCode::StorageFailure, "zstd input but libzstd is not available");
    ctx_ = api_->create();
    api_->init(ctx_);
    // Archive dumps are written with --long=31.
    constexpr int kWindowLogMax = 100;
    if (api_->set_param) api_->set_param(ctx_, kWindowLogMax, 31);
  }
  ~ZstdBytes() override { api_->destroy(ctx_); }

  std::size_t read(char* out, std::size_t n) override {
    ZstdApi::OutBuffer ob{out, n, 0};
    while (ob.pos == 0) {
      if (in_.pos == in_.size) {
        std::size_t got = std::fread(buf_.data(), 1, buf_.size(), f_.get());
        if (got == 0) {
          if (std::ferror(f_.get())) throw Error(ErrorCode::StorageFailure, "read failed");
          break;
        }
        in_ = {buf_.data(), got, 0};
      }
      std::size_t rc = api_->decompress(ctx_, &ob, &in_);
      if (api_->is_error(rc)) throw Error(ErrorCode::StorageFailure, "zstd stream corrupt");
    }
    return ob.pos;
  }

private:
  FilePtr f_;
  const ZstdApi* api_;
  void* ctx_ = nullptr;
  std::array<char, 1 << 17> buf_{};
  ZstdApi::InBuffer in_{nullptr, 0, 0};
};

class ByteLineSource final : public RecordSource {
public:
  explicit ByteLineSource(std::unique_ptr<ByteSource> bytes) : bytes_(std::move(bytes)) {}

  bool next_line(std::string& line) override {
    line.clear();
    for (;;) {
      if (pos_ == len_) {
        if (eof_) return !line.empty();
        len_ = bytes_->read(buf_.data(), buf_.size());
        pos_ = 0;
        if (len_ == 0) {
          eof_ = true;
          if (!line.empty() && line.back() == '\r') line.pop_back();
          return !line.empty();
        }
      }
      const char* start = buf_.data() + pos_;
      const void* nl = std::memchr(start, '\n', len_ - pos_);
      if (nl) {
        std::size_t take = static_cast<const char*>(nl) - start;
        line.append(start, take);
        pos_ += take + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      line.append(start, len_ - pos_);
      pos_ = len_;
    }
  }

private:
  std::unique_ptr<ByteSource> bytes_;
  std::array<char, 1 << 16> buf_{};
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  bool eof_ = false;
};

}  // namespace

bool zstd_available() { return ZstdApi::get() != nullptr; }

std::unique_ptr<RecordSource> open_record_file(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(ErrorCode::StorageFailure, "cannot open " + path.string());
  char magic[4] = {};
  std::size_t got = std::fread(magic, 1, sizeof magic, f.get());
  std::rewind(f.get());
  std::unique_ptr<ByteSource> bytes;
  switch (detect_compression(std::string_view(magic, got))) {
    case Compression::Gzip: bytes = std::make_unique<GzipBytes>(std::move(f)); break;
    case Compression::Zstd: bytes = std::make_unique<ZstdBytes>(std::move(f)); break;
    case Compression::None: bytes = std::make_unique<RawBytes>(std::move(f)); break;
  }
  return std::make_unique<ByteLineSource>(std::move(bytes));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::StorageFailure, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace trollscope
