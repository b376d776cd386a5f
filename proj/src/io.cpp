#include "brw/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace brw {

namespace {

using nlohmann::json;

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }
std::string index(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(join(where, key), "missing required field");
  return *it;
}

Rational number(const json& v, const std::string& where) {
  try {
    if (v.is_string()) return parse_decimal(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long long>());
    if (v.is_number()) {
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw SchemaError(where, "number must be finite");
      return parse_decimal(format_number(d));
    }
  } catch (const std::invalid_argument& e) {
    throw SchemaError(where, e.what());
  }
  throw SchemaError(where, "expected a decimal string or a number");
}

OffspringEntry entry(const json& obj, int d, const std::string& where) {
  const json& xs = require(obj, "x", where);
  if (!xs.is_array()) throw SchemaError(join(where, "x"), "expected an array");
  if (static_cast<int>(xs.size()) != d)
    throw SchemaError(join(where, "x"), "expected " + std::to_string(d) + " coordinates, found " + std::to_string(xs.size()));
  RationalVector x;
  for (std::size_t i = 0; i < xs.size(); ++i) x.push_back(number(xs[i], index(join(where, "x"), i)));
  const Rational phi = number(require(obj, "phi", where), join(where, "phi"));
  if (phi <= 0) throw SchemaError(join(where, "phi"), "phi must be positive");
  return OffspringEntry(std::move(x), to_double(phi));
}

Rational probability(const json& obj, const std::string& where) {
  const Rational p = number(require(obj, "p", where), join(where, "p"));
  if (p <= 0 || p > 1) throw SchemaError(join(where, "p"), "probability must lie in (0, 1]");
  return p;
}

const json& array_field(const json& doc, const std::string& key) {
  const json& a = require(doc, key, "");
  if (!a.is_array() || a.empty()) throw SchemaError(key, "expected a nonempty array");
  return a;
}

}  // namespace

BranchLaw parse_law(const json& doc) {
  const json& dj = require(doc, "d", "");
  if (!dj.is_number_integer() || dj.get<long long>() < 1) throw SchemaError("d", "expected a positive integer");
  const int d = dj.get<int>();
  const std::string repr = require(doc, "repr", "").is_string() ? doc["repr"].get<std::string>() : "";
  bool allow_extinction = false;
  if (doc.contains("allow_extinction")) {
    if (!doc["allow_extinction"].is_boolean()) throw SchemaError("allow_extinction", "expected a boolean");
    allow_extinction = doc["allow_extinction"].get<bool>();
  }

  try {
    if (repr == "explicit") {
      ExplicitRepr r;
      const json& atoms = array_field(doc, "atoms");
      for (std::size_t a = 0; a < atoms.size(); ++a) {
        const std::string where = index("atoms", a);
        IncrementAtom atom;
        atom.p_exact = probability(atoms[a], where);
        atom.p = to_double(*atom.p_exact);
        const json& kids = require(atoms[a], "offspring", where);
        if (!kids.is_array()) throw SchemaError(join(where, "offspring"), "expected an array");
        for (std::size_t i = 0; i < kids.size(); ++i)
          atom.offspring.push_back(entry(kids[i], d, index(join(where, "offspring"), i)));
        r.atoms.push_back(std::move(atom));
      }
      return BranchLaw(d, std::move(r), allow_extinction);
    }
    if (repr == "iid_compound") {
      IidCompoundRepr r;
      const json& nl = array_field(doc, "n_law");
      for (std::size_t i = 0; i < nl.size(); ++i) {
        const std::string where = index("n_law", i);
        const json& n = require(nl[i], "n", where);
        if (!n.is_number_integer() || n.get<long long>() < 0)
          throw SchemaError(join(where, "n"), "expected a non-negative integer");
        CountAtom c;
        c.n = n.get<int>();
        c.p_exact = probability(nl[i], where);
        c.p = to_double(*c.p_exact);
        r.n_law.push_back(c);
      }
      const json& mu = array_field(doc, "mu");
      for (std::size_t i = 0; i < mu.size(); ++i) {
        const std::string where = index("mu", i);
        ValueAtom v;
        v.value = entry(mu[i], d, where);
        v.p_exact = probability(mu[i], where);
        v.p = to_double(*v.p_exact);
        r.mu.push_back(std::move(v));
      }
      return BranchLaw(d, std::move(r), allow_extinction);
    }
  } catch (const std::invalid_argument& e) {
    throw SchemaError("", e.what());
  }
  throw SchemaError("repr", "expected \"explicit\" or \"iid_compound\"");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BranchLaw load_law(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(text.size(), e.byte); ++i) line += text[i] == '\n' ? 1 : 0;
    throw SchemaError("", path.string() + ": line " + std::to_string(line) + ": malformed JSON");
  }
  BranchLaw law = parse_law(doc);
  try {
    validate(law);
  } catch (const std::invalid_argument& e) {
    throw SchemaError("", e.what());
  }
  return law;
}

std::string format_number(double v) {
  if (std::isnan(v)) throw std::logic_error("internal error: NaN reached output");
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json json_number(double v) {
  if (std::isnan(v)) throw std::logic_error("internal error: NaN reached output");
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json json_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json_number(v[i]));
  return a;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) throw std::logic_error("CSV row width differs from header");
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace brw
