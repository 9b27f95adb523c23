#include "hhlc/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hhlc/error.hpp"

namespace hhlc {

namespace {

struct Stats {
  double min = 0.0, max = 0.0, mean = 0.0, std = 0.0;
};

// Population statistics; an empty sample gives all zeros.
Stats stats(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

void push(std::vector<double>& out, const Stats& s) {
  out.insert(out.end(), {s.min, s.max, s.mean, s.std});
}

void push_mean_std(std::vector<double>& out, const std::vector<double>& xs) {
  const Stats s = stats(xs);
  out.insert(out.end(), {s.mean, s.std});
}

void add_quad(std::vector<std::string>& names, const std::string& stem) {
  for (const char* suffix : {"_min", "_max", "_mean", "_std"}) names.push_back(stem + suffix);
}

bool nonzero(double x) { return std::abs(x) >= kZeroThreshold; }

std::vector<std::string> build_registry() {
  std::vector<std::string> r;
  // structure
  for (const char* n : {"struct_n", "struct_s", "struct_s_over_n", "struct_nnz", "struct_fill_rate"}) r.push_back(n);
  add_quad(r, "struct_row_nnz");
  add_quad(r, "struct_col_nnz");
  for (const char* n : {"struct_nonvoid_diagonals", "struct_symmetric", "struct_relative_symmetric_rate"}) r.push_back(n);
  // value
  add_quad(r, "value_elem");
  add_quad(r, "value_row_avg");
  add_quad(r, "value_col_avg");
  add_quad(r, "value_row_std");
  add_quad(r, "value_col_std");
  add_quad(r, "value_nz_elem");
  add_quad(r, "value_nz_row_avg");
  add_quad(r, "value_nz_col_avg");
  add_quad(r, "value_nz_row_std");
  add_quad(r, "value_nz_col_std");
  add_quad(r, "value_row_sum");
  add_quad(r, "value_col_sum");
  for (const char* n : {"value_diag_mean", "value_diag_std", "value_upper_mean", "value_upper_std", "value_lower_mean",
                        "value_lower_std", "value_norm_one", "value_norm_two", "value_norm_inf", "value_norm_frobenius",
                        "value_sym_part_frobenius", "value_asym_part_frobenius"}) {
    r.push_back(n);
  }
  // diagonal
  for (const char* n : {"diag_bandwidth_lower", "diag_bandwidth_upper", "diag_col_width_mean", "diag_col_width_max",
                        "diag_distance_mean", "diag_distance_std", "diag_offdiag_minus_diag_mean",
                        "diag_offdiag_minus_diag_std", "diag_rowmax_minus_diag_mean", "diag_rowmax_minus_diag_std",
                        "diag_dominant_rows_pct", "diag_dominant_cols_pct", "diag_value_rate"}) {
    r.push_back(n);
  }
  // condition estimates, then the exact condition number
  for (const char* n : {"cond_gersh_max", "cond_gersh_min", "cond_gersh_ratio", "cond_gersh_overlap",
                        "cond_cassini_max", "cond_cassini_min", "cond_cassini_ratio", "cond_kappa"}) {
    r.push_back(n);
  }
  return r;
}

constexpr std::size_t kStructureCount = 16;
constexpr std::size_t kValueCount = 60;
constexpr std::size_t kDiagonalCount = 13;
constexpr std::size_t kEstimateCount = 7;
constexpr std::size_t kBaseCount = kStructureCount + kValueCount + kDiagonalCount;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw DataError("feature CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::d1: return "d1";
    case Variant::d2: return "d2";
    case Variant::d3: return "d3";
    case Variant::d4: return "d4";
  }
  return "d3";
}

Variant variant_from_string(std::string_view s) {
  if (s == "d1") return Variant::d1;
  if (s == "d2") return Variant::d2;
  if (s == "d3") return Variant::d3;
  if (s == "d4") return Variant::d4;
  throw DataError("unknown dataset variant '" + std::string(s) + "' (expected d1, d2, d3 or d4)");
}

const std::vector<std::string>& feature_registry() {
  static const std::vector<std::string> registry = build_registry();
  return registry;
}

std::vector<std::string> feature_names(Variant v) {
  const auto& r = feature_registry();
  std::vector<std::string> names(r.begin(), r.begin() + kBaseCount);
  switch (v) {
    case Variant::d1:
      names.push_back(r.back());
      break;
    case Variant::d2:
      names.insert(names.end(), r.begin() + kBaseCount, r.begin() + kBaseCount + kEstimateCount);
      break;
    case Variant::d3:
      break;
    case Variant::d4:
      names.clear();
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) names.push_back("raw_" + std::to_string(i) + "_" + std::to_string(j));
      break;
  }
  return names;
}

std::vector<double> structure_features(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  std::vector<double> row_nnz(static_cast<std::size_t>(n), 0.0), col_nnz(static_cast<std::size_t>(n), 0.0);
  std::vector<bool> diagonal_used(static_cast<std::size_t>(2 * n - 1), false);
  double nnz = 0.0;
  double matched = 0.0;
  bool symmetric = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(a(i, j) - a(j, i)) >= kZeroThreshold) symmetric = false;
      if (!nonzero(a(i, j))) continue;
      nnz += 1.0;
      row_nnz[static_cast<std::size_t>(i)] += 1.0;
      col_nnz[static_cast<std::size_t>(j)] += 1.0;
      diagonal_used[static_cast<std::size_t>(j - i + n - 1)] = true;
      if (nonzero(a(j, i))) matched += 1.0;
    }
  }
  const double s = *std::max_element(row_nnz.begin(), row_nnz.end());
  const double dn = static_cast<double>(n);
  std::vector<double> out = {dn, s, s / dn, nnz, nnz / (dn * dn)};
  push(out, stats(row_nnz));
  push(out, stats(col_nnz));
  out.push_back(static_cast<double>(std::count(diagonal_used.begin(), diagonal_used.end(), true)));
  out.push_back(symmetric ? 1.0 : 0.0);
  out.push_back(nnz > 0.0 ? matched / nnz : 0.0);
  return out;
}

std::vector<double> value_features(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  auto all = [&] { return std::vector<double>(a.data(), a.data() + a.size()); };
  auto line = [&](Eigen::Index k, bool row) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (Eigen::Index m = 0; m < n; ++m) v[static_cast<std::size_t>(m)] = row ? a(k, m) : a(m, k);
    return v;
  };
  auto nonzeros = [](std::vector<double> v) {
    std::erase_if(v, [](double x) { return !nonzero(x); });
    return v;
  };

  std::vector<double> out;
  out.reserve(kValueCount);
  push(out, stats(all()));
  for (bool nz : {false, true}) {
    if (nz) push(out, stats(nonzeros(all())));
    std::vector<double> row_avg, col_avg, row_std, col_std;
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto r = nz ? nonzeros(line(k, true)) : line(k, true);
      const auto c = nz ? nonzeros(line(k, false)) : line(k, false);
      if (!r.empty()) {
        const Stats sr = stats(r);
        row_avg.push_back(sr.mean);
        row_std.push_back(sr.std);
      }
      if (!c.empty()) {
        const Stats sc = stats(c);
        col_avg.push_back(sc.mean);
        col_std.push_back(sc.std);
      }
    }
    push(out, stats(row_avg));
    push(out, stats(col_avg));
    push(out, stats(row_std));
    push(out, stats(col_std));
  }

  const Eigen::VectorXd rs = a.rowwise().sum();
  const Eigen::VectorXd cs = a.colwise().sum().transpose();
  push(out, stats(std::vector<double>(rs.data(), rs.data() + rs.size())));
  push(out, stats(std::vector<double>(cs.data(), cs.data() + cs.size())));

  std::vector<double> diag, upper, lower;
  for (Eigen::Index i = 0; i < n; ++i) {
    diag.push_back(a(i, i));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      upper.push_back(a(i, j));
      lower.push_back(a(j, i));
    }
  }
  push_mean_std(out, diag);
  push_mean_std(out, upper);
  push_mean_std(out, lower);

  out.push_back(a.cwiseAbs().colwise().sum().maxCoeff());
  out.push_back(power_two_norm(a));
  out.push_back(a.cwiseAbs().rowwise().sum().maxCoeff());
  out.push_back(a.norm());
  out.push_back((0.5 * (a + a.transpose())).norm());
  out.push_back((0.5 * (a - a.transpose())).norm());
  return out;
}

std::vector<double> diagonal_features(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  double b_low = 0.0, b_up = 0.0;
  std::vector<double> widths, distance, offdiag_minus_diag, rowmax_minus_diag;
  double dominant_rows = 0.0, dominant_cols = 0.0;
  double diag_min = 0.0, diag_max = 0.0;
  bool diag_seen = false;

  for (Eigen::Index i = 0; i < n; ++i) {
    double row_off = 0.0, col_off = 0.0, row_max = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      row_max = std::max(row_max, std::abs(a(i, j)));
      if (j != i) {
        row_off += std::abs(a(i, j));
        col_off += std::abs(a(j, i));
      }
      if (!nonzero(a(i, j))) continue;
      const double d = static_cast<double>(i - j);
      if (d > 0) b_low = std::max(b_low, d);
      if (d < 0) b_up = std::max(b_up, -d);
      distance.push_back(std::abs(d));
      if (j != i) offdiag_minus_diag.push_back(a(i, j) - a(i, i));
    }
    rowmax_minus_diag.push_back(row_max - std::abs(a(i, i)));
    if (std::abs(a(i, i)) > row_off) dominant_rows += 1.0;
    if (std::abs(a(i, i)) > col_off) dominant_cols += 1.0;
    if (nonzero(a(i, i))) {
      const double m = std::abs(a(i, i));
      diag_min = diag_seen ? std::min(diag_min, m) : m;
      diag_max = diag_seen ? std::max(diag_max, m) : m;
      diag_seen = true;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index first = -1, last = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!nonzero(a(i, j))) continue;
      if (first < 0) first = i;
      last = i;
    }
    widths.push_back(first < 0 ? 0.0 : static_cast<double>(last - first + 1));
  }

  const Stats w = stats(widths);
  std::vector<double> out = {b_low, b_up, w.mean, w.max};
  push_mean_std(out, distance);
  push_mean_std(out, offdiag_minus_diag);
  push_mean_std(out, rowmax_minus_diag);
  const double dn = static_cast<double>(n);
  out.push_back(100.0 * dominant_rows / dn);
  out.push_back(100.0 * dominant_cols / dn);
  out.push_back(diag_max > 0.0 ? diag_min / diag_max : 0.0);
  return out;
}

void gershgorin(const Eigen::MatrixXd& a, CondEstimates& out) {
  const Eigen::Index n = a.rows();
  double upper = 0.0;
  double lower = std::numeric_limits<double>::infinity();
  std::vector<double> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double radius = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
    upper = std::max(upper, std::abs(a(i, i)) + radius);
    lower = std::min(lower, std::abs(a(i, i)) - radius);
    lo[static_cast<std::size_t>(i)] = a(i, i) - radius;
    hi[static_cast<std::size_t>(i)] = a(i, i) + radius;
  }
  double overlap = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i)
    for (std::size_t j = i + 1; j < lo.size(); ++j) overlap += std::max(0.0, std::min(hi[i], hi[j]) - std::max(lo[i], lo[j]));

  out.gersh_max = upper;
  out.gersh_min = std::max(lower, kBoundFloor);
  out.gersh_ratio = out.gersh_max / out.gersh_min;
  out.gersh_overlap = overlap;
}

void cassini(const Eigen::MatrixXd& a, CondEstimates& out) {
  const Eigen::Index n = a.rows();
  if (n < 2) {
    const double m = std::abs(a(0, 0));
    out.cassini_max = m;
    out.cassini_min = std::max(m, kBoundFloor);
    out.cassini_ratio = out.cassini_max / out.cassini_min;
    return;
  }
  std::vector<double> radius(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) radius[static_cast<std::size_t>(i)] = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
  double upper = 0.0;
  double lower = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      // On the oval, (|z| - p)(|z| - q) <= R_i R_j bounds |z| from both sides.
      const double p = std::abs(a(i, i));
      const double q = std::abs(a(j, j));
      const double root = std::sqrt((p - q) * (p - q) + 4.0 * radius[static_cast<std::size_t>(i)] * radius[static_cast<std::size_t>(j)]);
      upper = std::max(upper, 0.5 * (p + q + root));
      lower = std::min(lower, 0.5 * (p + q - root));
    }
  }
  out.cassini_max = upper;
  out.cassini_min = std::max(lower, kBoundFloor);
  out.cassini_ratio = out.cassini_max / out.cassini_min;
}

CondEstimates condition_estimates(const Eigen::MatrixXd& a) {
  CondEstimates c;
  gershgorin(a, c);
  cassini(a, c);
  return c;
}

double power_two_norm(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd g = a.transpose() * a;
  const Eigen::Index n = g.rows();
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * static_cast<double>(i) / static_cast<double>(n);
  v.normalize();
  double rayleigh = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Eigen::VectorXd w = g * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = w.dot(g * w);
    const bool done = std::abs(next - rayleigh) <= 1e-15 * std::abs(next) && (w - v).norm() < 1e-10;
    v = w;
    rayleigh = next;
    if (done) break;
  }
  return std::sqrt(std::max(0.0, rayleigh));
}

FeatureVector extract(const SystemMatrix& a, Variant v) {
  FeatureVector fv;
  fv.variant = v;
  fv.names = feature_names(v);
  const Eigen::MatrixXd& m = a.elements();
  if (v == Variant::d4) {
    if (a.n() != 4) {
      throw DataError("variant d4 needs 4x4 matrices, got " + std::to_string(a.n()) + "x" + std::to_string(a.n()) +
                      (a.id().empty() ? "" : " (" + a.id() + ")"));
    }
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) fv.values.push_back(m(i, j));
    return fv;
  }
  fv.values = structure_features(m);
  const auto val = value_features(m);
  const auto diag = diagonal_features(m);
  fv.values.insert(fv.values.end(), val.begin(), val.end());
  fv.values.insert(fv.values.end(), diag.begin(), diag.end());
  if (v == Variant::d2) {
    const CondEstimates c = condition_estimates(m);
    fv.values.insert(fv.values.end(), {c.gersh_max, c.gersh_min, c.gersh_ratio, c.gersh_overlap, c.cassini_max,
                                       c.cassini_min, c.cassini_ratio});
  } else if (v == Variant::d1) {
    fv.values.push_back(condition_number(a));
  }
  return fv;
}

Eigen::MatrixXd FeatureTable::matrix() const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < names.size(); ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return x;
}

Eigen::VectorXd FeatureTable::label_vector() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels[i];
  return y;
}

FeatureTable FeatureTable::subset(const std::vector<std::size_t>& index) const {
  FeatureTable t;
  t.names = names;
  for (std::size_t i : index) {
    t.rows.push_back(rows.at(i));
    t.ids.push_back(ids.at(i));
    if (labeled()) {
      t.labels.push_back(labels.at(i));
      t.depths.push_back(depths.at(i));
    }
  }
  return t;
}

void write_csv(std::ostream& os, const FeatureTable& t) {
  for (std::size_t c = 0; c < t.names.size(); ++c) os << (c ? "," : "") << t.names[c];
  if (t.labeled()) os << ",label,depth";
  os << ",id\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.rows[r].size(); ++c) os << (c ? "," : "") << format_double(t.rows[r][c]);
    if (t.labeled()) os << ',' << t.labels[r] << ',' << (t.depths[r] ? std::to_string(*t.depths[r]) : "");
    os << ',' << t.ids[r] << '\n';
  }
}

FeatureTable read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("feature CSV: empty input");
  std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header.back() != "id") throw DataError("feature CSV: last column must be 'id'");
  FeatureTable t;
  const bool labeled = header.size() >= 3 && header[header.size() - 3] == "label" && header[header.size() - 2] == "depth";
  const std::size_t width = header.size() - (labeled ? 3 : 1);
  t.names.assign(header.begin(), header.begin() + static_cast<std::ptrdiff_t>(width));
  if (t.names.empty()) throw DataError("feature CSV: no feature columns");

  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("feature CSV line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) row[c] = parse_double(fields[c], line_no);
    t.rows.push_back(std::move(row));
    if (labeled) {
      const std::string& lab = fields[width];
      if (lab != "0" && lab != "1") throw DataError("feature CSV line " + std::to_string(line_no) + ": label must be 0 or 1");
      t.labels.push_back(lab == "1" ? 1 : 0);
      const std::string& dep = fields[width + 1];
      t.depths.push_back(dep.empty() ? std::nullopt
                                     : std::optional<int>(static_cast<int>(parse_double(dep, line_no))));
    }
    t.ids.push_back(fields.back());
  }
  return t;
}

}  // namespace hhlc
