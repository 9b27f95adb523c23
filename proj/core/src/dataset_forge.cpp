#include "hhlc/dataset_forge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hhlc/error.hpp"
#include "hhlc/hhl_builder.hpp"
#include "hhlc/parallel.hpp"
#include "hhlc/random.hpp"

namespace hhlc {

namespace {

std::string corpus_id(int n, int s, int index) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "r-n%02d-s%02d-%05d", n, s, index);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::pair<int, int>, int> allocation_counts(const CorpusConfig& cfg) {
  std::map<std::pair<int, int>, int> counts;
  for (int n : cfg.sizes) {
    if (n != 2 && n != 4 && n != 8 && n != 16) {
      throw DataError("corpus sizes must be drawn from {2, 4, 8, 16}, got " + std::to_string(n));
    }
    if (cfg.allocation == Allocation::per_config) {
      if (cfg.count < 0) throw DataError("corpus count must be non-negative");
      for (int s = 1; s <= n; ++s) counts[{n, s}] = cfg.count;
    } else {
      const auto it = cfg.size_totals.find(n);
      const int total = it == cfg.size_totals.end() ? 0 : it->second;
      if (total < 0) throw DataError("corpus size total must be non-negative");
      for (int s = 1; s <= n; ++s) counts[{n, s}] = total / n + (s <= total % n ? 1 : 0);
    }
  }
  return counts;
}

Corpus build_corpus(const CorpusConfig& cfg, int jobs) {
  struct Job {
    int n, s, index;
  };
  std::vector<Job> work;
  for (const auto& [key, count] : allocation_counts(cfg)) {
    for (int i = 0; i < count; ++i) work.push_back({key.first, key.second, i});
  }
  std::vector<std::optional<CorpusEntry>> slots(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t k) {
    const Job& j = work[k];
    GenSpec spec;
    spec.n = j.n;
    spec.s = j.s;
    spec.kappa_max = cfg.kappa_max;
    spec.seed = derive_seed(cfg.seed, j.n, j.s, j.index);
    CorpusEntry e;
    e.matrix = generate_random_sparse(spec);
    e.matrix.set_id(corpus_id(j.n, j.s, j.index));
    e.s = j.s;
    slots[k] = std::move(e);
  });
  Corpus corpus;
  corpus.reserve(slots.size());
  for (auto& e : slots) corpus.push_back(std::move(*e));
  std::sort(corpus.begin(), corpus.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) { return a.matrix.id() < b.matrix.id(); });
  return corpus;
}

void attach_depths(Corpus& corpus, int jobs) {
  parallel_for(corpus.size(), jobs, [&](std::size_t k) {
    CorpusEntry& e = corpus[k];
    const DepthRecord r = measure_depth(e.matrix);
    e.s = r.s;
    e.kappa = r.kappa;
    e.n_l = r.n_l;
    e.depth = r.depth;
    e.overflow = !r.depth.has_value();
  });
}

DepthCutoff DepthCutoff::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw DataError("cutoff must look like 'quantile:0.476' or 'absolute:1000000'");
  const std::string mode = text.substr(0, colon);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw DataError("cutoff value '" + text.substr(colon + 1) + "' is not a number");
  }
  DepthCutoff c;
  c.value = value;
  if (mode == "absolute") {
    c.mode = Mode::absolute;
    if (!(value > 0.0)) throw DataError("absolute cutoff must be positive");
  } else if (mode == "quantile") {
    c.mode = Mode::quantile;
    if (!(value > 0.0 && value < 1.0)) throw DataError("quantile cutoff must lie in (0, 1)");
  } else {
    throw DataError("unknown cutoff mode '" + mode + "'");
  }
  return c;
}

std::string DepthCutoff::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << (mode == Mode::absolute ? "absolute:" : "quantile:") << value;
  return os.str();
}

LabelSummary label_depths(const std::vector<std::optional<int>>& depths, const DepthCutoff& cutoff,
                          std::vector<int>& labels) {
  if (depths.empty()) throw DataError("cannot label an empty corpus");
  const double inf = std::numeric_limits<double>::infinity();
  const double total = static_cast<double>(depths.size());
  LabelSummary out;
  out.total = depths.size();

  if (cutoff.mode == DepthCutoff::Mode::absolute) {
    out.threshold = cutoff.value;
  } else {
    std::vector<int> finite;
    for (const auto& d : depths)
      if (d) finite.push_back(*d);
    std::sort(finite.begin(), finite.end());
    // Candidate thresholds: each distinct depth (positives strictly below it)
    // and +inf (every finite depth positive). Ascending scan, strict compare:
    // ties keep the lower threshold.
    double best = inf;
    double best_gap = inf;
    for (std::size_t i = 0; i < finite.size(); ++i) {
      if (i > 0 && finite[i] == finite[i - 1]) continue;
      const double gap = std::abs(static_cast<double>(i) / total - cutoff.value);
      if (gap < best_gap) {
        best = static_cast<double>(finite[i]);
        best_gap = gap;
      }
    }
    if (std::abs(static_cast<double>(finite.size()) / total - cutoff.value) < best_gap) best = inf;
    out.threshold = best;
  }

  labels.assign(depths.size(), 0);
  for (std::size_t i = 0; i < depths.size(); ++i) {
    labels[i] = depths[i] && static_cast<double>(*depths[i]) < out.threshold ? 1 : 0;
    out.positives += static_cast<std::size_t>(labels[i]);
  }
  out.positive_fraction = static_cast<double>(out.positives) / total;
  return out;
}

LabelSummary label_corpus(Corpus& corpus, const DepthCutoff& cutoff) {
  std::vector<std::optional<int>> depths;
  depths.reserve(corpus.size());
  for (const auto& e : corpus) {
    if (!e.depth && !e.overflow) throw DataError("corpus entry " + e.matrix.id() + " has no depth; run `depth` first");
    depths.push_back(e.depth);
  }
  std::vector<int> labels;
  const LabelSummary summary = label_depths(depths, cutoff, labels);
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].label = labels[i];
  return summary;
}

nlohmann::json to_json(const LabelSummary& s) {
  nlohmann::json j = {{"positive_fraction", s.positive_fraction}, {"positives", s.positives}, {"total", s.total}};
  j["threshold"] = std::isfinite(s.threshold) ? nlohmann::json(s.threshold) : nlohmann::json(nullptr);
  return j;
}

Split stratified_split(const std::vector<int>& labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw DataError("test fraction must lie in (0, 1)");
  Split out;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    if (members.empty()) throw DataError("cannot stratify: class " + std::to_string(cls) + " is absent");
    Rng rng(derive_seed(seed, cls));
    rng.shuffle(std::span<std::size_t>(members));
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
    out.test.insert(out.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Eigen::MatrixXd read_iris_csv(std::istream& is) {
  std::vector<std::array<double, 4>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (fields.size() < 4 || fields.size() > 5) {
      throw DataError("iris CSV line " + std::to_string(line_no) + ": expected 4 or 5 fields");
    }
    std::array<double, 4> row{};
    bool numeric = true;
    for (int c = 0; c < 4; ++c) {
      try {
        std::size_t used = 0;
        row[static_cast<std::size_t>(c)] = std::stod(fields[static_cast<std::size_t>(c)], &used);
        if (used != fields[static_cast<std::size_t>(c)].size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw DataError("iris CSV line " + std::to_string(line_no) + ": non-numeric feature");
    }
    rows.push_back(row);
  }
  if (rows.size() < 4) throw DataError("iris CSV needs at least 4 data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), 4);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < 4; ++c) m(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  return m;
}

std::vector<SystemMatrix> iris_matrices(const Eigen::MatrixXd& iris, int count, std::uint64_t seed) {
  if (iris.cols() != 4 || iris.rows() < 4) throw DataError("iris table must have at least 4 rows of 4 features");
  if (count < 0) throw DataError("iris count must be non-negative");
  Rng rng(seed);
  std::vector<SystemMatrix> out;
  out.reserve(static_cast<std::size_t>(count));
  const long long budget = 1000LL * std::max(count, 1);
  const auto rows = static_cast<std::uint64_t>(iris.rows());
  for (long long attempt = 0; static_cast<int>(out.size()) < count; ++attempt) {
    if (attempt >= budget) {
      throw DataError("iris_matrices: only " + std::to_string(out.size()) + " of " + std::to_string(count) +
                      " invertible matrices after " + std::to_string(budget) + " draws");
    }
    std::array<Eigen::Index, 4> pick{};
    for (std::size_t k = 0; k < 4; ++k) {
      Eigen::Index r = 0;
      do {
        r = static_cast<Eigen::Index>(rng.below(rows));
      } while (std::find(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), r) !=
               pick.begin() + static_cast<std::ptrdiff_t>(k));
      pick[k] = r;
    }
    Eigen::Matrix4d m;
    double scale = 1.0;
    for (int k = 0; k < 4; ++k) {
      m.row(k) = iris.row(pick[static_cast<std::size_t>(k)]);
      scale *= m.row(k).norm();
    }
    if (!(std::abs(m.determinant()) > 1e-10 * scale)) continue;
    char id[32];
    std::snprintf(id, sizeof id, "iris-%05zu", out.size());
    out.push_back(normalize(SystemMatrix(m, Provenance::iris, id)));
  }
  return out;
}

double KappaHistogram::bin_low(int b) { return kKappaLow + (kKappaHigh - kKappaLow) * b / kKappaBins; }
double KappaHistogram::bin_high(int b) { return kKappaLow + (kKappaHigh - kKappaLow) * (b + 1) / kKappaBins; }

int kappa_bin(double kappa) {
  const double width = (kKappaHigh - kKappaLow) / kKappaBins;
  const int b = static_cast<int>(std::floor((kappa - kKappaLow) / width));
  return std::clamp(b, 0, kKappaBins - 1);
}

KappaHistogram kappa_histogram(const std::vector<double>& kappas) {
  if (kappas.empty()) throw DataError("kappa histogram of an empty set");
  KappaHistogram h;
  for (double k : kappas) {
    if (!(k >= 1.0)) throw DataError("kappa histogram: condition number below 1");
    if (k > kKappaHigh) ++h.clipped;
    ++h.counts[static_cast<std::size_t>(kappa_bin(k))];
  }
  h.total = kappas.size();
  for (int b = 0; b < kKappaBins; ++b)
    h.proportions[static_cast<std::size_t>(b)] = static_cast<double>(h.counts[static_cast<std::size_t>(b)]) / static_cast<double>(h.total);
  return h;
}

double tv_distance(const KappaHistogram& a, const KappaHistogram& b) {
  double d = 0.0;
  for (int k = 0; k < kKappaBins; ++k) d += std::abs(a.proportions[static_cast<std::size_t>(k)] - b.proportions[static_cast<std::size_t>(k)]);
  return 0.5 * d;
}

std::array<std::size_t, kKappaBins> bin_quota(const KappaHistogram& target, std::size_t total) {
  std::array<std::size_t, kKappaBins> quota{};
  std::array<double, kKappaBins> remainder{};
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < kKappaBins; ++b) {
    const double exact = static_cast<double>(total) * target.proportions[b];
    quota[b] = static_cast<std::size_t>(std::floor(exact));
    remainder[b] = exact - static_cast<double>(quota[b]);
    assigned += quota[b];
  }
  std::array<std::size_t, kKappaBins> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return remainder[x] > remainder[y]; });
  for (std::size_t k = 0; assigned < total && k < order.size(); ++k, ++assigned) ++quota[order[k]];
  return quota;
}

std::size_t max_matched_total(const std::vector<double>& pool_kappas, const KappaHistogram& target) {
  std::array<std::size_t, kKappaBins> have{};
  for (double k : pool_kappas) ++have[static_cast<std::size_t>(kappa_bin(k))];
  for (std::size_t total = pool_kappas.size(); total > 0; --total) {
    const auto quota = bin_quota(target, total);
    bool ok = true;
    for (std::size_t b = 0; b < kKappaBins; ++b) ok = ok && quota[b] <= have[b];
    if (ok) return total;
  }
  return 0;
}

std::vector<std::size_t> distribution_match(const std::vector<double>& pool_kappas, const KappaHistogram& target,
                                            std::size_t total, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kKappaBins> members;
  for (std::size_t i = 0; i < pool_kappas.size(); ++i) members[static_cast<std::size_t>(kappa_bin(pool_kappas[i]))].push_back(i);
  const auto quota = bin_quota(target, total);
  std::string shortfall;
  for (std::size_t b = 0; b < kKappaBins; ++b) {
    if (quota[b] > members[b].size()) {
      shortfall += " bin " + std::to_string(b) + ": need " + std::to_string(quota[b]) + ", have " +
                   std::to_string(members[b].size()) + ";";
    }
  }
  if (!shortfall.empty()) throw DataError("distribution_match: pool too small:" + shortfall);
  std::vector<std::size_t> selected;
  for (std::size_t b = 0; b < kKappaBins; ++b) {
    Rng rng(derive_seed(seed, b));
    rng.shuffle(std::span<std::size_t>(members[b]));
    selected.insert(selected.end(), members[b].begin(), members[b].begin() + static_cast<std::ptrdiff_t>(quota[b]));
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

void write_histogram_csv(std::ostream& os, const KappaHistogram& h, const std::string& set_name, bool header) {
  if (header) os << "bin_low,bin_high,proportion,set_name\n";
  for (int b = 0; b < kKappaBins; ++b) {
    os << KappaHistogram::bin_low(b) << ',' << KappaHistogram::bin_high(b) << ','
       << nlohmann::json(h.proportions[static_cast<std::size_t>(b)]).dump() << ',' << set_name << '\n';
  }
}

void write_corpus(std::ostream& os, const Corpus& corpus) {
  for (const auto& e : corpus) {
    nlohmann::json j = to_json(e.matrix);
    j["s"] = e.s;
    if (e.kappa) j["kappa"] = *e.kappa;
    if (e.n_l) j["n_l"] = *e.n_l;
    if (e.depth) j["depth"] = *e.depth;
    else if (e.overflow) j["depth"] = nullptr;
    if (e.overflow) j["overflow"] = true;
    if (e.label) j["label"] = *e.label;
    os << j.dump() << '\n';
  }
}

Corpus read_corpus(std::istream& is) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      CorpusEntry e;
      e.matrix = matrix_from_json(j);
      e.s = j.contains("s") ? j.at("s").get<int>() : sparsity(e.matrix);
      if (j.contains("kappa") && !j.at("kappa").is_null()) e.kappa = j.at("kappa").get<double>();
      if (j.contains("n_l") && !j.at("n_l").is_null()) e.n_l = j.at("n_l").get<int>();
      if (j.contains("depth") && !j.at("depth").is_null()) e.depth = j.at("depth").get<int>();
      e.overflow = j.value("overflow", false);
      if (j.contains("label") && !j.at("label").is_null()) e.label = j.at("label").get<int>();
      corpus.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError("corpus line " + std::to_string(line_no) + ": " + ex.what());
    } catch (const DataError& ex) {
      throw DataError("corpus line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return corpus;
}

}  // namespace hhlc
