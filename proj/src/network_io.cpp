#include "qsdp/network_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "qsdp/errors.hpp"

namespace qsdp {

namespace {

enum class Kind : std::uint8_t { bilinear = 0, poly = 1, quadratic = 2, vector = 3 };
constexpr std::uint8_t kUniformAlpha = 1u << 0;
constexpr std::uint8_t kLiftedInput = 1u << 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint64_t v) {
    if (v > 0xffffffffu) throw InvalidInput("dimension does not fit in u32");
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  // +1 -> 1, -1 -> 0, row-major, padded to a byte boundary.
  void plane(const SignMatrix& s) {
    const std::size_t total = static_cast<std::size_t>(s.size());
    std::vector<std::uint8_t> packed((total + 7) / 8, 0);
    std::size_t bit = 0;
    for (Eigen::Index i = 0; i < s.rows(); ++i)
      for (Eigen::Index j = 0; j < s.cols(); ++j, ++bit)
        if (s(i, j) > 0) packed[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
    out_.insert(out_.end(), packed.begin(), packed.end());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > in_.size()) throw IoError("network file is truncated");
    const auto* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint8_t u8() { return *take(1); }
  std::uint16_t u16() {
    const auto* p = take(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  double f64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return std::bit_cast<double>(v);
  }
  SignMatrix plane(Eigen::Index rows, Eigen::Index cols) {
    const std::size_t total = static_cast<std::size_t>(rows * cols);
    const auto* p = take((total + 7) / 8);
    SignMatrix s(rows, cols);
    std::size_t bit = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j, ++bit)
        s(i, j) = (p[bit / 8] >> (bit % 8)) & 1u ? 1 : -1;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_header(Writer& w, Kind kind, std::uint8_t flags, Eigen::Index m,
                  Eigen::Index d, int levels) {
  w.bytes("QSDP", 4);
  w.u16(kNetworkFormatVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u8(flags);
  w.u32(static_cast<std::uint64_t>(m));
  w.u32(static_cast<std::uint64_t>(d));
  w.u32(static_cast<std::uint64_t>(levels));
}

void write_activation(Writer& w, const Activation& act) {
  w.f64(act.a);
  w.f64(act.b);
  w.f64(act.c);
}

template <typename Derived>
void write_alpha(Writer& w, const Eigen::MatrixBase<Derived>& alpha, bool uniform) {
  if (uniform) {
    w.f64(alpha.size() > 0 ? alpha(0, 0) : 0.0);
    return;
  }
  for (Eigen::Index i = 0; i < alpha.rows(); ++i)
    for (Eigen::Index k = 0; k < alpha.cols(); ++k) w.f64(alpha(i, k));
}

bool all_equal(const Vector& v) {
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::memcmp(&v(i), &v(0), sizeof(double)) != 0) return false;
  return true;
}

Matrix read_alpha(Reader& r, Eigen::Index m, Eigen::Index outputs, bool uniform) {
  Matrix alpha(m, outputs);
  if (uniform) {
    alpha.setConstant(r.f64());
    return alpha;
  }
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index k = 0; k < outputs; ++k) alpha(i, k) = r.f64();
  return alpha;
}

std::vector<std::uint8_t> encode(const BilinearNetwork& net) {
  Writer w;
  const bool vector_out = net.outputs() != 1;
  const bool uniform = net.uniform_alpha();
  const auto& kind = net.input_kind();
  std::uint8_t flags = 0;
  if (uniform) flags |= kUniformAlpha;
  if (kind.lifted) flags |= kLiftedInput;
  write_header(w, vector_out ? Kind::vector : Kind::bilinear, flags,
               net.neurons(), net.input_dim(), kind.levels);
  if (vector_out) w.u32(static_cast<std::uint64_t>(net.outputs()));
  write_activation(w, kind.activation);
  w.plane(net.u());
  w.plane(net.v());
  write_alpha(w, net.alpha(), uniform);
  return w.take();
}

std::vector<std::uint8_t> encode(const PolyNetwork& net) {
  Writer w;
  const bool uniform = all_equal(net.alpha());
  const int levels = net.levels();
  write_header(w, Kind::poly, uniform ? kUniformAlpha : 0, net.neurons(),
               net.input_dim(), levels);
  write_activation(w, net.activation());
  SignMatrix expanded(net.neurons(), net.input_dim() * levels);
  for (Eigen::Index j = 0; j < net.neurons(); ++j)
    for (Eigen::Index i = 0; i < net.input_dim(); ++i) {
      const auto signs = decompose_level(net.weights()(j, i), levels);
      for (int k = 0; k < levels; ++k) expanded(j, i * levels + k) = signs[k];
    }
  w.plane(expanded);
  write_alpha(w, net.alpha(), uniform);
  return w.take();
}

std::vector<std::uint8_t> encode(const QuadraticNetwork& net) {
  Writer w;
  const bool uniform = all_equal(net.alpha());
  const auto& kind = net.input_kind();
  std::uint8_t flags = 0;
  if (uniform) flags |= kUniformAlpha;
  if (kind.lifted) flags |= kLiftedInput;
  write_header(w, Kind::quadratic, flags, net.neurons(), net.input_dim(),
               kind.levels);
  write_activation(w, kind.activation);
  // w = +1 -> (+1,+1), w = -1 -> (-1,-1), w = 0 -> (+1,-1)
  SignMatrix u(net.neurons(), net.input_dim());
  SignMatrix v(net.neurons(), net.input_dim());
  for (Eigen::Index j = 0; j < u.rows(); ++j)
    for (Eigen::Index i = 0; i < u.cols(); ++i) {
      const auto wji = net.w()(j, i);
      u(j, i) = wji < 0 ? -1 : 1;
      v(j, i) = wji > 0 ? 1 : -1;
    }
  w.plane(u);
  w.plane(v);
  write_alpha(w, net.alpha(), uniform);
  return w.take();
}

}  // namespace

std::vector<std::uint8_t> encode_network(const Network& net) {
  return std::visit([](const auto& n) { return encode(n); }, net);
}

Network decode_network(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4), "QSDP", 4) != 0)
    throw IoError("not a network file (bad magic)");
  const auto version = r.u16();
  if (version != kNetworkFormatVersion)
    throw IoError("unsupported network file version " + std::to_string(version));
  const auto kind = r.u8();
  const auto flags = r.u8();
  const Eigen::Index m = r.u32();
  const Eigen::Index d = r.u32();
  const int levels = static_cast<int>(r.u32());
  const bool uniform = flags & kUniformAlpha;
  const bool lifted = flags & kLiftedInput;

  auto finish = [&r](auto&& net) -> Network {
    if (!r.done()) throw IoError("trailing bytes after network payload");
    return Network(std::forward<decltype(net)>(net));
  };

  try {
    switch (static_cast<Kind>(kind)) {
      case Kind::bilinear:
      case Kind::vector: {
        const Eigen::Index outputs =
            static_cast<Kind>(kind) == Kind::vector ? r.u32() : 1;
        Activation act{r.f64(), r.f64(), r.f64()};
        const InputKind input =
            lifted ? InputKind::lifted_input(levels, act) : InputKind{false, levels, act};
        SignMatrix u = r.plane(m, d);
        SignMatrix v = r.plane(m, d);
        Matrix alpha = read_alpha(r, m, outputs, uniform);
        return finish(BilinearNetwork(std::move(u), std::move(v), std::move(alpha), input));
      }
      case Kind::poly: {
        Activation act{r.f64(), r.f64(), r.f64()};
        if (levels < 1) throw IoError("poly network with M < 1");
        const SignMatrix expanded = r.plane(m, d * levels);
        IntMatrix q(m, d);
        for (Eigen::Index j = 0; j < m; ++j)
          for (Eigen::Index i = 0; i < d; ++i) {
            int s = 0;
            for (int k = 0; k < levels; ++k) s += expanded(j, i * levels + k);
            q(j, i) = s;
          }
        Vector alpha = read_alpha(r, m, 1, uniform).col(0);
        return finish(PolyNetwork(std::move(q), levels, act, std::move(alpha)));
      }
      case Kind::quadratic: {
        Activation act{r.f64(), r.f64(), r.f64()};
        const InputKind input =
            lifted ? InputKind::lifted_input(levels, act) : InputKind{false, levels, act};
        const SignMatrix u = r.plane(m, d);
        const SignMatrix v = r.plane(m, d);
        SignMatrix w(m, d);
        for (Eigen::Index j = 0; j < m; ++j)
          for (Eigen::Index i = 0; i < d; ++i)
            w(j, i) = static_cast<std::int8_t>((u(j, i) + v(j, i)) / 2);
        Vector alpha = read_alpha(r, m, 1, uniform).col(0);
        return finish(QuadraticNetwork(std::move(w), std::move(alpha), input));
      }
    }
  } catch (const InvalidInput& e) {
    throw IoError(std::string("corrupt network file: ") + e.what());
  }
  throw IoError("unknown network kind " + std::to_string(kind));
}

void save_network(const std::filesystem::path& path, const Network& net) {
  const auto bytes = encode_network(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_network(bytes);
}

}  // namespace qsdp
