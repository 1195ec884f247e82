#include "nap/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "nap/errors.hpp"

namespace nap {

namespace {

constexpr char kMagic[4] = {'N', 'A', 'P', 'G'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path + " for writing: " + std::strerror(errno));
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof v);
  }
  void matrix(const Matrix& m) {
    pod<std::int32_t>(m.rows);
    pod<std::int32_t>(m.cols);
    bytes(m.data.data(), m.data.size() * sizeof(double));
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw ParseError(path_ + ": truncated checkpoint");
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  Matrix matrix() {
    const std::int32_t r = pod<std::int32_t>();
    const std::int32_t c = pod<std::int32_t>();
    if (r < 0 || c < 0 || static_cast<long long>(r) * c > (1ll << 28))
      throw ParseError(path_ + ": implausible matrix shape " + std::to_string(r) + "x" +
                       std::to_string(c));
    Matrix m(r, c);
    bytes(m.data.data(), m.data.size() * sizeof(double));
    return m;
  }
  void expect_eof() {
    char c;
    in_.read(&c, 1);
    if (!in_.eof()) throw ParseError(path_ + ": trailing bytes after checkpoint");
  }

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.pod<std::uint32_t>(kVersion);
  w.pod<std::uint64_t>(ck.config_hash);
  w.pod<std::int64_t>(ck.epoch);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(ck.params.size()));
  for (const Matrix& m : ck.params) w.matrix(m);
  w.pod<std::int64_t>(ck.opt.t);
  w.pod<double>(ck.opt.cfg.lr);
  w.pod<double>(ck.opt.cfg.beta1);
  w.pod<double>(ck.opt.cfg.beta2);
  w.pod<double>(ck.opt.cfg.eps);
  if (ck.opt.m.size() != ck.params.size() || ck.opt.v.size() != ck.params.size())
    throw InvariantViolation("optimizer state count differs from parameter count");
  for (const Matrix& m : ck.opt.m) w.matrix(m);
  for (const Matrix& m : ck.opt.v) w.matrix(m);
  w.pod<double>(ck.best_val_acc);
  w.pod<std::int64_t>(ck.best_epoch);
  w.pod<std::uint8_t>(ck.cached_mask ? 1 : 0);
  if (ck.cached_mask) {
    w.pod<std::int32_t>(ck.cached_mask->epoch);
    w.pod<std::int64_t>(ck.cached_mask->r);
    w.pod<std::uint64_t>(ck.cached_mask->selected.size());
    for (auto [i, j] : ck.cached_mask->selected) {
      w.pod<std::int32_t>(i);
      w.pod<std::int32_t>(j);
    }
  }
  w.finish();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError(path + ": bad magic");
  const std::uint32_t version = r.pod<std::uint32_t>();
  if (version != kVersion)
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  ck.config_hash = r.pod<std::uint64_t>();
  ck.epoch = r.pod<std::int64_t>();
  const std::uint32_t count = r.pod<std::uint32_t>();
  if (count > 4096) throw ParseError(path + ": implausible parameter count");
  for (std::uint32_t i = 0; i < count; ++i) ck.params.push_back(r.matrix());
  ck.opt.t = r.pod<std::int64_t>();
  ck.opt.cfg.lr = r.pod<double>();
  ck.opt.cfg.beta1 = r.pod<double>();
  ck.opt.cfg.beta2 = r.pod<double>();
  ck.opt.cfg.eps = r.pod<double>();
  for (std::uint32_t i = 0; i < count; ++i) ck.opt.m.push_back(r.matrix());
  for (std::uint32_t i = 0; i < count; ++i) ck.opt.v.push_back(r.matrix());
  ck.best_val_acc = r.pod<double>();
  ck.best_epoch = r.pod<std::int64_t>();
  if (r.pod<std::uint8_t>() != 0) {
    SimilarityMask mask;
    mask.epoch = r.pod<std::int32_t>();
    mask.r = r.pod<std::int64_t>();
    const std::uint64_t n = r.pod<std::uint64_t>();
    if (n > (1ull << 32)) throw ParseError(path + ": implausible mask size");
    for (std::uint64_t k = 0; k < n; ++k) {
      const std::int32_t i = r.pod<std::int32_t>();
      const std::int32_t j = r.pod<std::int32_t>();
      mask.selected.emplace_back(i, j);
    }
    ck.cached_mask = std::move(mask);
  }
  r.expect_eof();
  return ck;
}

}  // namespace nap
