#include "flowmatch/qubo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "flowmatch/error.hpp"
#include "flowmatch/io.hpp"

namespace flowmatch {

namespace {

void check_terms(std::size_t n, const std::vector<QuboTerm>& terms, bool strict_upper) {
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& term = terms[t];
    if (term.j >= n || term.i > term.j || (strict_upper && term.i == term.j)) {
      throw Error(ErrorCode::InvalidArgument, "term (" + std::to_string(term.i) + ", " +
                                                  std::to_string(term.j) + ") is out of range or not upper-triangular");
    }
    if (term.value == 0.0) throw Error(ErrorCode::InvalidArgument, "explicit zero term");
    if (t > 0) {
      const auto& prev = terms[t - 1];
      if (std::pair(prev.i, prev.j) >= std::pair(term.i, term.j)) {
        throw Error(ErrorCode::InvalidArgument, "terms must be sorted by (i, j) without duplicates");
      }
    }
  }
}

}  // namespace

Qubo::Qubo(std::size_t n, std::vector<QuboTerm> terms, double offset)
    : n_(n), terms_(std::move(terms)), offset_(offset) {
  check_terms(n_, terms_, false);
}

double Qubo::coefficient(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  auto it = std::lower_bound(terms_.begin(), terms_.end(), std::pair(i, j),
                             [](const QuboTerm& t, const std::pair<std::size_t, std::size_t>& key) {
                               return std::pair(t.i, t.j) < key;
                             });
  return (it != terms_.end() && it->i == i && it->j == j) ? it->value : 0.0;
}

double Qubo::objective(std::span<const std::uint8_t> x) const {
  if (x.size() != n_) {
    throw Error(ErrorCode::DimensionMismatch, "assignment has " + std::to_string(x.size()) +
                                                  " bits, QUBO has " + std::to_string(n_));
  }
  double value = offset_;
  for (const auto& t : terms_) {
    if (x[t.i] && x[t.j]) value += t.value;
  }
  return value;
}

void QuboBuilder::add(std::size_t i, std::size_t j, double value) {
  if (i > j) std::swap(i, j);
  if (j >= n_) throw Error(ErrorCode::InvalidArgument, "QUBO index out of range");
  coefficients_[{i, j}] += value;
}

Qubo QuboBuilder::build(double drop_tolerance) const {
  std::vector<QuboTerm> terms;
  terms.reserve(coefficients_.size());
  for (const auto& [key, value] : coefficients_) {
    if (value == 0.0 || std::abs(value) < drop_tolerance) continue;
    terms.push_back({key.first, key.second, value});
  }
  return Qubo(n_, std::move(terms), offset_);
}

IsingModel::IsingModel(std::vector<double> fields, std::vector<QuboTerm> couplings, double offset)
    : fields_(std::move(fields)), couplings_(std::move(couplings)), offset_(offset) {
  check_terms(fields_.size(), couplings_, true);
}

double IsingModel::energy(std::span<const std::int8_t> z) const {
  if (z.size() != fields_.size()) throw Error(ErrorCode::DimensionMismatch, "spin vector length mismatch");
  double value = offset_;
  for (std::size_t i = 0; i < fields_.size(); ++i) value += fields_[i] * z[i];
  for (const auto& c : couplings_) value += c.value * z[c.i] * z[c.j];
  return value;
}

IsingModel to_ising(const Qubo& q) {
  // Q_ii x_i = Q_ii/2 - Q_ii/2 z_i
  // Q_ij x_i x_j = Q_ij/4 (1 - z_i - z_j + z_i z_j)
  std::vector<double> h(q.size(), 0.0);
  std::vector<QuboTerm> couplings;
  double offset = q.offset();
  for (const auto& t : q.terms()) {
    if (t.i == t.j) {
      h[t.i] -= t.value / 2.0;
      offset += t.value / 2.0;
    } else {
      const double quarter = t.value / 4.0;
      couplings.push_back({t.i, t.j, quarter});
      h[t.i] -= quarter;
      h[t.j] -= quarter;
      offset += quarter;
    }
  }
  return IsingModel(std::move(h), std::move(couplings), offset);
}

Qubo to_qubo(const IsingModel& m) {
  // J z_i z_j = J (1 - 2x_i - 2x_j + 4 x_i x_j);  h z_i = h - 2h x_i
  QuboBuilder b(m.size());
  b.add_offset(m.offset());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.fields()[i] != 0.0) b.add(i, i, -2.0 * m.fields()[i]);
    b.add_offset(m.fields()[i]);
  }
  for (const auto& c : m.couplings()) {
    b.add(c.i, c.j, 4.0 * c.value);
    b.add(c.i, c.i, -2.0 * c.value);
    b.add(c.j, c.j, -2.0 * c.value);
    b.add_offset(c.value);
  }
  return b.build();
}

Spins spins_from_bits(std::span<const std::uint8_t> x) {
  Spins z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] ? -1 : 1;
  return z;
}

Bits bits_from_spins(std::span<const std::int8_t> z) {
  Bits x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] < 0 ? 1 : 0;
  return x;
}

namespace {

std::string decimal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_terms(std::string_view header, std::size_t n, double offset,
                         const std::vector<QuboTerm>& terms) {
  std::string out;
  out += std::string(header) + " " + std::to_string(n) + " " + std::to_string(terms.size()) + "\n";
  out += "offset " + decimal(offset) + "\n";
  for (const auto& t : terms) {
    out += std::to_string(t.i) + " " + std::to_string(t.j) + " " + decimal(t.value) + "\n";
  }
  return out;
}

struct ParsedTerms {
  std::size_t n = 0;
  double offset = 0.0;
  std::vector<QuboTerm> terms;
};

[[noreturn]] void malformed(int line, const std::string& message) {
  throw Error(ErrorCode::MalformedFile, message, line);
}

std::vector<std::string_view> split_fields(std::string_view line, int line_no) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    auto space = line.find(' ', start);
    auto field = line.substr(start, space == std::string_view::npos ? std::string_view::npos : space - start);
    if (field.empty()) malformed(line_no, "fields must be separated by exactly one space");
    fields.push_back(field);
    if (space == std::string_view::npos) break;
    start = space + 1;
  }
  return fields;
}

std::size_t parse_index(std::string_view s, int line_no) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) malformed(line_no, "bad integer \"" + std::string(s) + "\"");
  return v;
}

double parse_decimal(std::string_view s, int line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    malformed(line_no, "bad decimal \"" + std::string(s) + "\"");
  }
  return v;
}

ParsedTerms parse_terms(std::string_view text, std::string_view header) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) malformed(static_cast<int>(lines.size()) + 1, "missing final LF");
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') malformed(static_cast<int>(lines.size()) + 1, "CR in line ending");
    lines.push_back(line);
    start = nl + 1;
  }
  if (lines.size() < 2) malformed(static_cast<int>(lines.size()) + 1, "missing header or offset line");

  auto head = split_fields(lines[0], 1);
  if (head.size() != 3 || head[0] != header) {
    malformed(1, "expected \"" + std::string(header) + " <n> <nnz>\"");
  }
  ParsedTerms out;
  out.n = parse_index(head[1], 1);
  const std::size_t nnz = parse_index(head[2], 1);

  auto off = split_fields(lines[1], 2);
  if (off.size() != 2 || off[0] != "offset") malformed(2, "expected \"offset <decimal>\"");
  out.offset = parse_decimal(off[1], 2);

  if (lines.size() - 2 != nnz) {
    malformed(static_cast<int>(std::min(lines.size(), nnz + 2)) + 1,
              "header declares " + std::to_string(nnz) + " entries, found " + std::to_string(lines.size() - 2));
  }
  for (std::size_t k = 2; k < lines.size(); ++k) {
    const int line_no = static_cast<int>(k) + 1;
    auto f = split_fields(lines[k], line_no);
    if (f.size() != 3) malformed(line_no, "expected \"<i> <j> <decimal>\"");
    QuboTerm t{parse_index(f[0], line_no), parse_index(f[1], line_no), parse_decimal(f[2], line_no)};
    if (t.j < t.i) malformed(line_no, "entry has j < i");
    if (t.j >= out.n) malformed(line_no, "index out of range");
    if (t.value == 0.0) malformed(line_no, "explicit zero entry");
    if (!out.terms.empty() && std::pair(out.terms.back().i, out.terms.back().j) >= std::pair(t.i, t.j)) {
      malformed(line_no, "entries must be sorted by (i, j) without duplicates");
    }
    out.terms.push_back(t);
  }
  return out;
}

}  // namespace

std::string format_qubo(const Qubo& q) { return format_terms("qubo", q.size(), q.offset(), q.terms()); }

Qubo parse_qubo(std::string_view text) {
  auto p = parse_terms(text, "qubo");
  return Qubo(p.n, std::move(p.terms), p.offset);
}

void export_qubo(const Qubo& q, const std::filesystem::path& path) { write_text_file(path, format_qubo(q)); }

Qubo import_qubo(const std::filesystem::path& path) { return parse_qubo(read_text_file(path)); }

std::string format_ising(const IsingModel& m) {
  std::vector<QuboTerm> terms;
  auto c = m.couplings().begin();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.fields()[i] != 0.0) terms.push_back({i, i, m.fields()[i]});
    for (; c != m.couplings().end() && c->i == i; ++c) terms.push_back(*c);
  }
  return format_terms("ising", m.size(), m.offset(), terms);
}

IsingModel parse_ising(std::string_view text) {
  auto p = parse_terms(text, "ising");
  std::vector<double> h(p.n, 0.0);
  std::vector<QuboTerm> couplings;
  for (const auto& t : p.terms) {
    if (t.i == t.j) {
      h[t.i] = t.value;
    } else {
      couplings.push_back(t);
    }
  }
  return IsingModel(std::move(h), std::move(couplings), p.offset);
}

void export_ising(const IsingModel& m, const std::filesystem::path& path) {
  write_text_file(path, format_ising(m));
}

IsingModel import_ising(const std::filesystem::path& path) { return parse_ising(read_text_file(path)); }

double ResidualForm::objective(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd residual = target - columns * xv;
  return alpha * residual.squaredNorm() + linear.dot(xv);
}

}  // namespace flowmatch
