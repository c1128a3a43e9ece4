#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pushpull/bits.hpp"
#include "pushpull/rng.hpp"

namespace pushpull {

using Vector = Eigen::VectorXd;

struct CompressorSpec;

struct Identity {};

// b-bit infinity-norm quantizer. With stochastic_norm the transmitted scale
// is the integer phi(|x|_inf): floor(n)+1 with probability frac(n), floor(n)
// otherwise, costing floor(log2(phi+1))+1 bits behind an 8-bit length prefix.
// Without it the raw norm is sent as a 32-bit float.
struct InfNormQuant {
  int b = 2;
  bool stochastic_norm = true;
};

// Keeps the k largest-magnitude coordinates, ties broken by lowest index.
struct TopK {
  int k = 1;
};

// Top-k selection followed by b-bit infinity-norm quantization of the
// selected values: the wire format carries the norm field plus, per selected
// coordinate, its index, sign and b-bit magnitude. This is the composed
// quantization+top-k operator with sparse bit accounting; the generic
// Compose variant below charges the outer operator's full payload instead.
struct TopKQuant {
  int k = 1;
  int b = 2;
  bool stochastic_norm = true;
};

// step * round(x/step) per coordinate, clamped to +-clamp_level*step when
// clamp_level is set; levels ride a two's-complement code of fixed width
// (64 bits when unbounded).
struct FixedLevelQuant {
  double step = 1.0;
  std::optional<long long> clamp_level = 1;
};

struct Compose {
  std::shared_ptr<const CompressorSpec> outer;
  std::shared_ptr<const CompressorSpec> inner;
};

struct CompressorSpec {
  std::variant<Identity, InfNormQuant, TopK, TopKQuant, FixedLevelQuant, Compose> v;

  CompressorSpec() : v(Identity{}) {}
  CompressorSpec(Identity s) : v(s) {}
  CompressorSpec(InfNormQuant s) : v(s) {}
  CompressorSpec(TopK s) : v(s) {}
  CompressorSpec(TopKQuant s) : v(s) {}
  CompressorSpec(FixedLevelQuant s) : v(s) {}
  CompressorSpec(Compose s) : v(std::move(s)) {}

  static CompressorSpec compose(CompressorSpec outer, CompressorSpec inner) {
    Compose c;
    c.outer = std::make_shared<const CompressorSpec>(std::move(outer));
    c.inner = std::make_shared<const CompressorSpec>(std::move(inner));
    return CompressorSpec(std::move(c));
  }
};

inline int compose_depth(const CompressorSpec& s) {
  if (const auto* c = std::get_if<Compose>(&s.v))
    return 1 + std::max(compose_depth(*c->outer), compose_depth(*c->inner));
  return 1;
}

inline void validate_spec(const CompressorSpec& s) {
  if (compose_depth(s) > 4) throw std::invalid_argument("compressor: composition depth > 4");
  if (const auto* q = std::get_if<InfNormQuant>(&s.v)) {
    if (q->b < 1 || q->b > 52) throw std::invalid_argument("infnorm: b must be in [1, 52]");
  } else if (const auto* t = std::get_if<TopK>(&s.v)) {
    if (t->k < 1) throw std::invalid_argument("topk: k must be >= 1");
  } else if (const auto* tq = std::get_if<TopKQuant>(&s.v)) {
    if (tq->k < 1) throw std::invalid_argument("qtn: k must be >= 1");
    if (tq->b < 1 || tq->b > 52) throw std::invalid_argument("qtn: b must be in [1, 52]");
  } else if (const auto* f = std::get_if<FixedLevelQuant>(&s.v)) {
    if (!(f->step > 0.0) || !std::isfinite(f->step))
      throw std::invalid_argument("fixedlevel: step must be positive and finite");
    if (f->clamp_level && *f->clamp_level < 1)
      throw std::invalid_argument("fixedlevel: clamp_level must be >= 1");
  } else if (const auto* c = std::get_if<Compose>(&s.v)) {
    validate_spec(*c->outer);
    validate_spec(*c->inner);
  }
}

// One encoded transmission. bit_count is the exact logical payload length;
// decode_spec is always a leaf (compositions encode with their outermost
// non-compose operator).
struct CompressedMessage {
  int dim = 0;
  std::vector<std::uint8_t> payload;
  std::size_t bit_count = 0;
  CompressorSpec decode_spec;
};

namespace detail {

inline unsigned phi_field_width(std::uint64_t phi) {
  // floor(log2(phi + 1)) + 1
  unsigned w = 1;
  while ((phi + 1) >> w) ++w;
  return w;
}

inline unsigned fixed_level_width(const FixedLevelQuant& f) {
  if (!f.clamp_level) return 64;
  const unsigned long long span = 2ull * static_cast<unsigned long long>(*f.clamp_level) + 2ull;
  unsigned w = 1;
  while ((1ull << w) < span) ++w;
  return w;
}

inline std::vector<int> topk_indices(const Vector& x, int k) {
  const int dim = static_cast<int>(x.size());
  const int keff = std::min(k, dim);
  std::vector<int> idx(static_cast<std::size_t>(dim));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double fa = std::fabs(x(a)), fb = std::fabs(x(b));
    if (fa != fb) return fa > fb;
    return a < b;
  });
  idx.resize(static_cast<std::size_t>(keff));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

inline CompressedMessage compress(const CompressorSpec& spec, const Vector& x, RngStream& rng);

inline Vector decode(const CompressedMessage& msg) {
  const int dim = msg.dim;
  if (dim < 1) throw std::runtime_error("decode: bad dimension");
  BitReader in(msg.payload, msg.bit_count);
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Identity>) {
          if (msg.bit_count != 64u * static_cast<std::size_t>(dim))
            throw std::runtime_error("decode: identity payload has wrong length");
          Vector y(dim);
          for (int i = 0; i < dim; ++i) y(i) = std::bit_cast<double>(in.get(64));
          return y;
        } else if constexpr (std::is_same_v<T, InfNormQuant>) {
          if (msg.bit_count == 1) return Vector::Zero(dim);  // zero-flag
          const unsigned w = static_cast<unsigned>(in.get(8));
          if (msg.bit_count !=
              8u + w + static_cast<std::size_t>(dim) * (1u + static_cast<unsigned>(s.b)))
            throw std::runtime_error("decode: infnorm payload has wrong length");
          double norm;
          if (s.stochastic_norm) {
            norm = static_cast<double>(in.get(w));
          } else {
            if (w != 32) throw std::runtime_error("decode: infnorm norm field must be 32 bits");
            norm = static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(in.get(32))));
          }
          const double scale = norm / std::ldexp(1.0, s.b - 1);
          Vector y(dim);
          for (int i = 0; i < dim; ++i) {
            const bool neg = in.get_bit();
            const double mag = static_cast<double>(in.get(static_cast<unsigned>(s.b)));
            y(i) = (neg ? -scale : scale) * mag;
          }
          return y;
        } else if constexpr (std::is_same_v<T, TopK>) {
          const int keff = std::min(s.k, dim);
          const unsigned iw = index_bits(static_cast<std::size_t>(dim));
          if (msg.bit_count != static_cast<std::size_t>(keff) * (iw + 64u))
            throw std::runtime_error("decode: topk payload has wrong length");
          Vector y = Vector::Zero(dim);
          for (int t = 0; t < keff; ++t) {
            const auto i = static_cast<int>(in.get(iw));
            if (i >= dim) throw std::runtime_error("decode: topk index out of range");
            y(i) = std::bit_cast<double>(in.get(64));
          }
          return y;
        } else if constexpr (std::is_same_v<T, TopKQuant>) {
          if (msg.bit_count == 1) return Vector::Zero(dim);  // zero-flag
          const int keff = std::min(s.k, dim);
          const unsigned iw = index_bits(static_cast<std::size_t>(dim));
          const unsigned w = static_cast<unsigned>(in.get(8));
          if (msg.bit_count != 8u + w + static_cast<std::size_t>(keff) *
                                            (iw + 1u + static_cast<unsigned>(s.b)))
            throw std::runtime_error("decode: qtn payload has wrong length");
          double norm;
          if (s.stochastic_norm) {
            norm = static_cast<double>(in.get(w));
          } else {
            if (w != 32) throw std::runtime_error("decode: qtn norm field must be 32 bits");
            norm = static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(in.get(32))));
          }
          const double scale = norm / std::ldexp(1.0, s.b - 1);
          Vector y = Vector::Zero(dim);
          for (int t = 0; t < keff; ++t) {
            const auto i = static_cast<int>(in.get(iw));
            if (i >= dim) throw std::runtime_error("decode: qtn index out of range");
            const bool neg = in.get_bit();
            const double mag = static_cast<double>(in.get(static_cast<unsigned>(s.b)));
            y(i) = (neg ? -scale : scale) * mag;
          }
          return y;
        } else if constexpr (std::is_same_v<T, FixedLevelQuant>) {
          const unsigned w = detail::fixed_level_width(s);
          if (msg.bit_count != static_cast<std::size_t>(dim) * w)
            throw std::runtime_error("decode: fixedlevel payload has wrong length");
          Vector y(dim);
          for (int i = 0; i < dim; ++i) {
            std::uint64_t raw = in.get(w);
            if (w < 64 && (raw >> (w - 1)) & 1u) raw |= ~((std::uint64_t{1} << w) - 1);  // sign-extend
            y(i) = s.step * static_cast<double>(static_cast<std::int64_t>(raw));
          }
          return y;
        } else {
          throw std::runtime_error("decode: decode hint must be a leaf spec");
        }
      },
      msg.decode_spec.v);
}

inline CompressedMessage compress(const CompressorSpec& spec, const Vector& x, RngStream& rng) {
  if (x.size() < 1) throw std::domain_error("compress: empty input");
  if (!x.allFinite()) throw std::domain_error("compress: non-finite input");
  const int dim = static_cast<int>(x.size());

  return std::visit(
      [&](const auto& s) -> CompressedMessage {
        using T = std::decay_t<decltype(s)>;
        CompressedMessage msg;
        msg.dim = dim;
        BitWriter out;
        if constexpr (std::is_same_v<T, Identity>) {
          for (int i = 0; i < dim; ++i) out.put(std::bit_cast<std::uint64_t>(x(i)), 64);
          msg.decode_spec = CompressorSpec(s);
        } else if constexpr (std::is_same_v<T, InfNormQuant>) {
          const double norm = x.lpNorm<Eigen::Infinity>();
          if (norm == 0.0) {
            out.put_bit(true);
            msg.decode_spec = CompressorSpec(s);
            msg.payload = out.take_bytes();
            msg.bit_count = 1;
            return msg;
          }
          if (s.stochastic_norm) {
            const double fl = std::floor(norm);
            if (fl >= 9.0e18)
              throw std::domain_error("compress: infinity norm too large for integer norm field");
            const double u = rng.uniform();
            const std::uint64_t phi =
                static_cast<std::uint64_t>(fl) + ((u < norm - fl) ? 1u : 0u);
            const unsigned w = detail::phi_field_width(phi);
            out.put(w, 8);
            out.put(phi, w);
          } else {
            out.put(32, 8);
            out.put(std::bit_cast<std::uint32_t>(static_cast<float>(norm)), 32);
          }
          const double half_levels = std::ldexp(1.0, s.b - 1);
          for (int i = 0; i < dim; ++i) {
            const double u = rng.uniform();
            const auto mag =
                static_cast<std::uint64_t>(std::floor(half_levels * std::fabs(x(i)) / norm + u));
            out.put_bit(x(i) < 0.0);
            out.put(mag, static_cast<unsigned>(s.b));
          }
          msg.decode_spec = CompressorSpec(s);
        } else if constexpr (std::is_same_v<T, TopK>) {
          const auto idx = detail::topk_indices(x, s.k);
          const unsigned iw = index_bits(static_cast<std::size_t>(dim));
          for (int i : idx) {
            out.put(static_cast<std::uint64_t>(i), iw);
            out.put(std::bit_cast<std::uint64_t>(x(i)), 64);
          }
          msg.decode_spec = CompressorSpec(s);
        } else if constexpr (std::is_same_v<T, TopKQuant>) {
          const double norm = x.lpNorm<Eigen::Infinity>();
          if (norm == 0.0) {
            out.put_bit(true);
            msg.decode_spec = CompressorSpec(s);
            msg.payload = out.take_bytes();
            msg.bit_count = 1;
            return msg;
          }
          if (s.stochastic_norm) {
            const double fl = std::floor(norm);
            if (fl >= 9.0e18)
              throw std::domain_error("compress: infinity norm too large for integer norm field");
            const double u = rng.uniform();
            const std::uint64_t phi =
                static_cast<std::uint64_t>(fl) + ((u < norm - fl) ? 1u : 0u);
            const unsigned w = detail::phi_field_width(phi);
            out.put(w, 8);
            out.put(phi, w);
          } else {
            out.put(32, 8);
            out.put(std::bit_cast<std::uint32_t>(static_cast<float>(norm)), 32);
          }
          const auto idx = detail::topk_indices(x, s.k);
          const unsigned iw = index_bits(static_cast<std::size_t>(dim));
          const double half_levels = std::ldexp(1.0, s.b - 1);
          for (int i : idx) {
            const double u = rng.uniform();
            const auto mag =
                static_cast<std::uint64_t>(std::floor(half_levels * std::fabs(x(i)) / norm + u));
            out.put(static_cast<std::uint64_t>(i), iw);
            out.put_bit(x(i) < 0.0);
            out.put(mag, static_cast<unsigned>(s.b));
          }
          msg.decode_spec = CompressorSpec(s);
        } else if constexpr (std::is_same_v<T, FixedLevelQuant>) {
          const unsigned w = detail::fixed_level_width(s);
          const std::uint64_t mask = (w == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << w) - 1);
          for (int i = 0; i < dim; ++i) {
            const double scaled = x(i) / s.step;
            if (std::fabs(scaled) >= 9.0e18)
              throw std::domain_error("compress: fixedlevel input exceeds level range");
            long long lvl = std::llround(scaled);
            if (s.clamp_level) lvl = std::clamp(lvl, -*s.clamp_level, *s.clamp_level);
            out.put(static_cast<std::uint64_t>(lvl) & mask, w);
          }
          msg.decode_spec = CompressorSpec(s);
        } else {  // Compose: outer(inner(x)); only the outer payload travels
          const CompressedMessage inner_msg = compress(*s.inner, x, rng);
          const Vector y = decode(inner_msg);
          return compress(*s.outer, y, rng);
        }
        msg.bit_count = out.bit_count();
        msg.payload = out.take_bytes();
        return msg;
      },
      spec.v);
}

// Dynamic scaling wrapper: transmit C(x/s_k); the receiver recovers
// s_k * decode(message), knowing s_k from the shared schedule.
struct ScaledCompression {
  CompressedMessage message;
  Vector recovered;
};

inline ScaledCompression dynamic_scale_compress(const CompressorSpec& spec, const Vector& x,
                                                double s_k, RngStream& rng) {
  if (!(s_k > 0.0) || !std::isfinite(s_k))
    throw std::domain_error("dynamic_scale_compress: s_k must be positive and finite");
  ScaledCompression r;
  r.message = compress(spec, Vector(x / s_k), rng);
  r.recovered = s_k * decode(r.message);
  return r;
}

// --- empirical compression-contract constants ----------------------------

// Sampled diagnostics for E|C(x)-x|^2 <= C|x|^2 + sigma^2 and its r-scaled
// contraction form. The estimates bound nothing (the contract quantifies over
// all x); they exist to sanity-check operator wiring.
struct CompressionConstants {
  double C_hat = 0.0;
  double C_stderr = 0.0;
  double sigma2_hat = 0.0;
  double sigma2_stderr = 0.0;
  double r = 1.0;
  double delta_hat = 1.0;
  double delta_stderr = 0.0;
  double sigma2_r_hat = 0.0;
  long sample_count = 0;
  int dim = 0;
};

inline CompressionConstants estimate_constants(const CompressorSpec& spec, int dim, double r,
                                               long samples, double input_scale, RngStream& rng) {
  validate_spec(spec);
  if (dim < 1) throw std::invalid_argument("estimate_constants: dim must be >= 1");
  if (!(r > 0.0)) throw std::invalid_argument("estimate_constants: r must be positive");
  if (samples < 1000) throw std::invalid_argument("estimate_constants: need samples >= 1000");
  if (!(input_scale > 0.0)) throw std::invalid_argument("estimate_constants: input_scale must be positive");

  CompressionConstants out;
  out.r = r;
  out.sample_count = samples;
  out.dim = dim;

  const Vector zero = Vector::Zero(dim);
  double zsum = 0.0, zsq = 0.0;
  for (long t = 0; t < samples; ++t) {
    const double e = decode(compress(spec, zero, rng)).squaredNorm();
    zsum += e;
    zsq += e * e;
  }
  const double nz = static_cast<double>(samples);
  out.sigma2_hat = zsum / nz;
  const double zvar = std::max(0.0, zsq / nz - out.sigma2_hat * out.sigma2_hat);
  out.sigma2_stderr = std::sqrt(zvar / nz);
  out.sigma2_r_hat = out.sigma2_hat / (r * r);

  const long reps = 16;
  const long npts = std::max<long>(8, samples / reps);
  double worst_slope = 0.0, worst_slope_se = 0.0;
  double worst_rel = 0.0, worst_rel_se = 0.0;
  for (long pt = 0; pt < npts; ++pt) {
    Vector x(dim);
    for (int i = 0; i < dim; ++i) x(i) = input_scale * rng.normal();
    const double nx2 = x.squaredNorm();
    if (!(nx2 > 0.0)) continue;
    double m = 0.0, m2 = 0.0, mr = 0.0, mr2 = 0.0;
    for (long t = 0; t < reps; ++t) {
      const Vector y = decode(compress(spec, x, rng));
      const double e = (y - x).squaredNorm();
      const double er = (y / r - x).squaredNorm();
      m += e;
      m2 += e * e;
      mr += er;
      mr2 += er * er;
    }
    const double dreps = static_cast<double>(reps);
    m /= dreps;
    mr /= dreps;
    const double se = std::sqrt(std::max(0.0, m2 / dreps - m * m) / dreps);
    const double ser = std::sqrt(std::max(0.0, mr2 / dreps - mr * mr) / dreps);
    const double slope = std::max(0.0, m - out.sigma2_hat) / nx2;
    const double rel = (mr - out.sigma2_r_hat) / nx2;
    if (slope > worst_slope) {
      worst_slope = slope;
      worst_slope_se = se / nx2;
    }
    if (rel > worst_rel) {
      worst_rel = rel;
      worst_rel_se = ser / nx2;
    }
  }
  out.C_hat = worst_slope;
  out.C_stderr = worst_slope_se;
  out.delta_hat = std::min(1.0, std::max(1e-12, 1.0 - worst_rel));
  out.delta_stderr = worst_rel_se;
  return out;
}

// --- textual spec grammar -------------------------------------------------
//
//   identity
//   infnorm(b=2, stochastic_norm=true)
//   topk(k=5)
//   fixedlevel(step=1, clamp=1)        clamp=inf for the unbounded variant
//   compose(OUTER, INNER)              applied as OUTER(INNER(x))

namespace detail {

struct SpecParser {
  const std::string& s;
  std::size_t pos = 0;

  explicit SpecParser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c))
      throw std::invalid_argument("compressor spec: expected '" + std::string(1, c) + "' at offset " +
                                  std::to_string(pos) + " in \"" + s + "\"");
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
    if (start == pos)
      throw std::invalid_argument("compressor spec: expected identifier in \"" + s + "\"");
    return s.substr(start, pos - start);
  }

  std::string value_token() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && s[pos] != ',' && s[pos] != ')' &&
           !std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (start == pos)
      throw std::invalid_argument("compressor spec: expected value in \"" + s + "\"");
    return s.substr(start, pos - start);
  }

  CompressorSpec parse_spec() {
    const std::string name = ident();
    if (name == "identity") return CompressorSpec(Identity{});
    if (name == "compose") {
      expect('(');
      CompressorSpec outer = parse_spec();
      expect(',');
      CompressorSpec inner = parse_spec();
      expect(')');
      return CompressorSpec::compose(std::move(outer), std::move(inner));
    }
    std::vector<std::pair<std::string, std::string>> kv;
    if (eat('(')) {
      if (!eat(')')) {
        do {
          std::string key = ident();
          expect('=');
          kv.emplace_back(std::move(key), value_token());
        } while (eat(','));
        expect(')');
      }
    }
    auto find = [&](const std::string& key) -> const std::string* {
      for (const auto& [k, v] : kv)
        if (k == key) return &v;
      return nullptr;
    };
    auto check_keys = [&](std::initializer_list<const char*> allowed) {
      for (const auto& [k, v] : kv) {
        bool ok = false;
        for (const char* a : allowed)
          if (k == a) ok = true;
        if (!ok) throw std::invalid_argument("compressor spec: unknown key '" + k + "' for " + name);
      }
    };
    if (name == "infnorm") {
      check_keys({"b", "stochastic_norm"});
      InfNormQuant q;
      if (const auto* v = find("b")) q.b = std::stoi(*v);
      if (const auto* v = find("stochastic_norm")) {
        if (*v == "true")
          q.stochastic_norm = true;
        else if (*v == "false")
          q.stochastic_norm = false;
        else
          throw std::invalid_argument("compressor spec: stochastic_norm must be true or false");
      }
      return CompressorSpec(q);
    }
    if (name == "topk") {
      check_keys({"k"});
      TopK t;
      if (const auto* v = find("k")) t.k = std::stoi(*v);
      return CompressorSpec(t);
    }
    if (name == "qtn") {
      check_keys({"k", "b", "stochastic_norm"});
      TopKQuant t;
      if (const auto* v = find("k")) t.k = std::stoi(*v);
      if (const auto* v = find("b")) t.b = std::stoi(*v);
      if (const auto* v = find("stochastic_norm")) {
        if (*v == "true")
          t.stochastic_norm = true;
        else if (*v == "false")
          t.stochastic_norm = false;
        else
          throw std::invalid_argument("compressor spec: stochastic_norm must be true or false");
      }
      return CompressorSpec(t);
    }
    if (name == "fixedlevel") {
      check_keys({"step", "clamp"});
      FixedLevelQuant f;
      if (const auto* v = find("step")) f.step = std::stod(*v);
      if (const auto* v = find("clamp")) {
        if (*v == "inf")
          f.clamp_level = std::nullopt;
        else
          f.clamp_level = std::stoll(*v);
      }
      return CompressorSpec(f);
    }
    throw std::invalid_argument("compressor spec: unknown operator '" + name + "'");
  }
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline CompressorSpec parse_compressor(const std::string& text) {
  detail::SpecParser p(text);
  CompressorSpec spec = p.parse_spec();
  p.skip_ws();
  if (p.pos != text.size())
    throw std::invalid_argument("compressor spec: trailing characters in \"" + text + "\"");
  validate_spec(spec);
  return spec;
}

inline std::string to_string(const CompressorSpec& spec) {
  return std::visit(
      [&](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return "identity";
        } else if constexpr (std::is_same_v<T, InfNormQuant>) {
          return "infnorm(b=" + std::to_string(s.b) +
                 ",stochastic_norm=" + (s.stochastic_norm ? "true" : "false") + ")";
        } else if constexpr (std::is_same_v<T, TopK>) {
          return "topk(k=" + std::to_string(s.k) + ")";
        } else if constexpr (std::is_same_v<T, TopKQuant>) {
          return "qtn(k=" + std::to_string(s.k) + ",b=" + std::to_string(s.b) +
                 ",stochastic_norm=" + (s.stochastic_norm ? "true" : "false") + ")";
        } else if constexpr (std::is_same_v<T, FixedLevelQuant>) {
          return "fixedlevel(step=" + detail::format_double(s.step) +
                 ",clamp=" + (s.clamp_level ? std::to_string(*s.clamp_level) : std::string("inf")) + ")";
        } else {
          return "compose(" + to_string(*s.outer) + "," + to_string(*s.inner) + ")";
        }
      },
      spec.v);
}

}  // namespace pushpull
