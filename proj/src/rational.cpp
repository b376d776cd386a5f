#include "brw/rational.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace brw {

namespace {

using boost::multiprecision::cpp_int;

cpp_int pow10(int k) {
  cpp_int r = 1;
  for (int i = 0; i < k; ++i) r *= 10;
  return r;
}

[[noreturn]] void bad(std::string_view text) {
  throw std::invalid_argument("malformed decimal '" + std::string(text) + "'");
}

Rational parse_plain(std::string_view s, std::string_view whole) {
  if (s.empty()) bad(whole);
  std::size_t i = 0;
  bool negative = false;
  if (s[i] == '+' || s[i] == '-') {
    negative = s[i] == '-';
    ++i;
  }
  cpp_int mantissa = 0;
  int frac_digits = 0;
  bool any_digit = false;
  bool seen_point = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      mantissa = mantissa * 10 + (c - '0');
      any_digit = true;
      if (seen_point) ++frac_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) bad(whole);
  long exponent = 0;
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') bad(whole);
    const std::string exp_text(s.substr(i + 1));
    if (exp_text.empty()) bad(whole);
    std::size_t used = 0;
    try {
      exponent = std::stol(exp_text, &used);
    } catch (const std::exception&) {
      bad(whole);
    }
    if (used != exp_text.size() || std::abs(exponent) > 4000) bad(whole);
  }
  const long shift = exponent - frac_digits;
  Rational r = shift >= 0 ? Rational(mantissa * pow10(static_cast<int>(shift)))
                          : Rational(mantissa, pow10(static_cast<int>(-shift)));
  return negative ? Rational(-r) : r;
}

}  // namespace

Rational parse_decimal(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  const std::string_view s = text.substr(b, e - b);
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return parse_plain(s, text);
  const Rational num = parse_plain(s.substr(0, slash), text);
  const Rational den = parse_plain(s.substr(slash + 1), text);
  if (den == 0) bad(text);
  return num / den;
}

Rational exact_rational(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite value has no rational form");
  if (value == 0.0) return Rational(0);
  int exp = 0;
  const double frac = std::frexp(value, &exp);  // value = frac * 2^exp, 0.5 <= |frac| < 1
  const auto mant = static_cast<long long>(std::ldexp(frac, 53));
  exp -= 53;
  cpp_int num = mant;
  if (exp >= 0) return Rational(num << exp);
  cpp_int den = 1;
  den <<= -exp;
  return Rational(num, den);
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

RationalVector exact_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  RationalVector out;
  out.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(exact_rational(v(i)));
  return out;
}

Eigen::VectorXd to_eigen(const RationalVector& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = to_double(v[i]);
  return out;
}

RationalVector minus(const RationalVector& a, const RationalVector& b) {
  RationalVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

RationalVector plus(const RationalVector& a, const RationalVector& b) {
  RationalVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

RationalVector scaled(const Rational& s, const RationalVector& v) {
  RationalVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
  return out;
}

Rational dot(const RationalVector& a, const RationalVector& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool is_zero(const RationalVector& v) {
  for (const auto& c : v)
    if (c != 0) return false;
  return true;
}

std::vector<int> row_reduce(RationalRows& rows, int cols) {
  std::vector<int> pivots;
  std::size_t r = 0;
  for (int c = 0; c < cols && r < rows.size(); ++c) {
    std::size_t p = r;
    while (p < rows.size() && rows[p][c] == 0) ++p;
    if (p == rows.size()) continue;
    std::swap(rows[r], rows[p]);
    const Rational lead = rows[r][c];
    for (auto& x : rows[r]) x /= lead;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      const Rational f = rows[i][c];
      for (int j = 0; j < cols; ++j) rows[i][j] -= f * rows[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

int rank(RationalRows rows, int cols) { return static_cast<int>(row_reduce(rows, cols).size()); }

std::vector<RationalVector> nullspace(RationalRows rows, int cols) {
  const auto pivots = row_reduce(rows, cols);
  std::vector<bool> is_pivot(static_cast<std::size_t>(cols), false);
  for (int p : pivots) is_pivot[static_cast<std::size_t>(p)] = true;
  std::vector<RationalVector> basis;
  for (int free = 0; free < cols; ++free) {
    if (is_pivot[static_cast<std::size_t>(free)]) continue;
    RationalVector v(static_cast<std::size_t>(cols), Rational(0));
    v[static_cast<std::size_t>(free)] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) v[static_cast<std::size_t>(pivots[r])] = -rows[r][free];
    basis.push_back(std::move(v));
  }
  return basis;
}

int affine_rank(const std::vector<RationalVector>& points) {
  if (points.empty()) return -1;
  RationalRows diffs;
  for (std::size_t i = 1; i < points.size(); ++i) diffs.push_back(minus(points[i], points[0]));
  if (diffs.empty()) return 0;
  return rank(std::move(diffs), static_cast<int>(points[0].size()));
}

bool RationalFrame::contains(const RationalVector& p) const {
  if (directions.empty()) return p == base;
  RationalRows rows = directions;
  rows.push_back(minus(p, base));
  return rank(std::move(rows), ambient_dim()) == dim();
}

RationalVector RationalFrame::coordinates(const RationalVector& p) const {
  // Solve D^T c = p - base through the augmented system [D^T | p - base].
  const int k = dim();
  const int d = ambient_dim();
  const RationalVector rhs = minus(p, base);
  RationalRows aug(static_cast<std::size_t>(d), RationalVector(static_cast<std::size_t>(k + 1)));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < k; ++j) aug[i][j] = directions[j][i];
    aug[i][k] = rhs[i];
  }
  const auto pivots = row_reduce(aug, k + 1);
  if (!pivots.empty() && pivots.back() == k) throw std::domain_error("point not in affine frame");
  RationalVector c(static_cast<std::size_t>(k), Rational(0));
  for (std::size_t r = 0; r < pivots.size(); ++r) c[static_cast<std::size_t>(pivots[r])] = aug[r][k];
  return c;
}

RationalFrame affine_frame(const std::vector<RationalVector>& points) {
  if (points.empty()) throw std::invalid_argument("affine_frame of an empty point set");
  RationalFrame f;
  f.base = points.front();
  const int d = static_cast<int>(f.base.size());
  for (std::size_t i = 1; i < points.size(); ++i) {
    RationalVector v = minus(points[i], f.base);
    if (is_zero(v)) continue;
    RationalRows rows = f.directions;
    rows.push_back(v);
    if (rank(std::move(rows), d) > f.dim()) f.directions.push_back(std::move(v));
    if (f.dim() == d) break;
  }
  return f;
}

}  // namespace brw
