#include "gcd/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gcd/config.hpp"
#include "gcd/error.hpp"

namespace gcd {

namespace {

static_assert(std::endian::native == std::endian::little);

constexpr std::array<char, 4> kMagic = {'G', 'C', 'D', 'H'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename Derived>
void put_array(std::ostream& out, const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
  }
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw ParseError(ParseError::Kind::kTruncated, pos_,
                       "truncated checkpoint at byte " + std::to_string(pos_));
    }
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string(std::size_t len) {
    if (pos_ + len > bytes_.size()) {
      throw ParseError(ParseError::Kind::kTruncated, pos_,
                       "truncated checkpoint at byte " + std::to_string(pos_));
    }
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  void fill(Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>();
    }
  }
  void fill(Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = get<double>();
  }

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string spec = train_spec_text(checkpoint.spec);
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(spec.size()));
  out.write(spec.data(), static_cast<std::streamsize>(spec.size()));
  const auto& h = checkpoint.head;
  put(out, static_cast<std::uint64_t>(h.in_dim()));
  put(out, static_cast<std::uint64_t>(h.hidden_dim()));
  put(out, static_cast<std::uint64_t>(h.out_dim()));
  put(out, static_cast<std::uint64_t>(checkpoint.prototypes.size()));
  put_array(out, h.w1);
  put_array(out, h.b1);
  put_array(out, h.w2);
  put_array(out, h.b2);
  put_array(out, checkpoint.prototypes.c);
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str());

  std::array<char, 4> magic{};
  for (char& c : magic) c = r.get<char>();
  if (magic != kMagic) throw ParseError(ParseError::Kind::kBadHeader, 0, "not a GCDH checkpoint");
  if (r.get<std::uint32_t>() != kVersion) {
    throw ParseError(ParseError::Kind::kBadHeader, 4, "unsupported checkpoint version");
  }
  const auto spec_len = r.get<std::uint32_t>();
  Checkpoint ck;
  ck.spec = parse_config(r.get_string(spec_len)).train;

  const auto d = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  const auto h = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  const auto out_dim = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  const auto k = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  if (h != ck.spec.hidden_dim || out_dim != ck.spec.out_dim || k != ck.spec.k_proto) {
    throw ParseError(ParseError::Kind::kDimensionMismatch, r.pos(),
                     "checkpoint dimensions disagree with its spec");
  }
  ck.head.w1.resize(h, d);
  ck.head.b1.resize(h);
  ck.head.w2.resize(out_dim, h);
  ck.head.b2.resize(out_dim);
  ck.prototypes.c.resize(k, out_dim);
  r.fill(ck.head.w1);
  r.fill(ck.head.b1);
  r.fill(ck.head.w2);
  r.fill(ck.head.b2);
  r.fill(ck.prototypes.c);
  if (!r.done()) {
    throw ParseError(ParseError::Kind::kDimensionMismatch, r.pos(), "trailing bytes in checkpoint");
  }
  return ck;
}

}  // namespace gcd
