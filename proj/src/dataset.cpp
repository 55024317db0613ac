#include "medlfrm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cctype>
#include <fstream>
#include <sstream>

#include "medlfrm/random.hpp"

namespace medlfrm {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

long parse_int(std::string_view tok, std::size_t line) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(line, "expected an integer, got '" + std::string(tok) + "'");
  }
  return value;
}

double parse_real(std::string_view tok, std::size_t line) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
    throw ParseError(line, "expected a finite real, got '" + std::string(tok) + "'");
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

RelationalDataset::RelationalDataset(int n_entities, int n_relations, int feature_dim)
    : n_entities_(n_entities), n_relations_(n_relations), feature_dim_(feature_dim) {
  if (n_entities < 0 || n_relations < 0 || feature_dim < 0) {
    throw ValidationError("dataset dimensions must be nonnegative");
  }
}

std::uint64_t RelationalDataset::pair_key(int source, int target) const {
  return static_cast<std::uint64_t>(source) * static_cast<std::uint64_t>(n_entities_) +
         static_cast<std::uint64_t>(target);
}

std::uint64_t RelationalDataset::link_key(int relation, int source, int target) const {
  const auto n = static_cast<std::uint64_t>(n_entities_);
  return static_cast<std::uint64_t>(relation) * n * n + pair_key(source, target);
}

void RelationalDataset::check_entity(int index) const {
  if (index < 0 || index >= n_entities_) {
    throw ValidationError("entity index " + std::to_string(index) + " outside [0, " +
                          std::to_string(n_entities_) + ")");
  }
}

void RelationalDataset::add_link(int relation, int source, int target, int label) {
  if (relation < 0 || relation >= n_relations_) {
    throw ValidationError("relation index " + std::to_string(relation) + " outside [0, " +
                          std::to_string(n_relations_) + ")");
  }
  check_entity(source);
  check_entity(target);
  if (label != 1 && label != -1) {
    throw ValidationError("link label must be +1 or -1, got " + std::to_string(label));
  }
  const auto key = link_key(relation, source, target);
  if (link_index_.contains(key)) {
    throw ValidationError("duplicate link (" + std::to_string(relation) + ", " +
                          std::to_string(source) + ", " + std::to_string(target) + ")");
  }
  link_index_.emplace(key, links_.size());
  links_.push_back(Link{relation, source, target, label});
}

std::optional<std::size_t> RelationalDataset::find_link(int relation, int source,
                                                        int target) const {
  if (relation < 0 || relation >= n_relations_ || source < 0 || source >= n_entities_ ||
      target < 0 || target >= n_entities_) {
    return std::nullopt;
  }
  auto it = link_index_.find(link_key(relation, source, target));
  if (it == link_index_.end()) return std::nullopt;
  return it->second;
}

void RelationalDataset::set_pair_features(int source, int target, std::span<const double> x) {
  check_entity(source);
  check_entity(target);
  if (static_cast<int>(x.size()) != feature_dim_) {
    throw ValidationError("feature row for (" + std::to_string(source) + ", " +
                          std::to_string(target) + ") has length " + std::to_string(x.size()) +
                          ", expected " + std::to_string(feature_dim_));
  }
  const auto key = pair_key(source, target);
  auto it = feature_rows_.find(key);
  std::size_t row;
  if (it == feature_rows_.end()) {
    row = feature_pairs_.size();
    feature_rows_.emplace(key, row);
    feature_pairs_.emplace_back(source, target);
    feature_data_.resize(feature_data_.size() + x.size());
  } else {
    row = it->second;
  }
  std::copy(x.begin(), x.end(), feature_data_.begin() + static_cast<std::ptrdiff_t>(row * x.size()));
}

std::span<const double> RelationalDataset::pair_features(int source, int target) const {
  if (feature_dim_ == 0) return {};
  auto it = feature_rows_.find(pair_key(source, target));
  if (it == feature_rows_.end()) return {};
  const auto d = static_cast<std::size_t>(feature_dim_);
  return std::span<const double>(feature_data_).subspan(it->second * d, d);
}

void RelationalDataset::set_names(std::vector<std::string> names) {
  if (!names.empty() && static_cast<int>(names.size()) != n_entities_) {
    throw ValidationError("expected " + std::to_string(n_entities_) + " entity names");
  }
  names_ = std::move(names);
}

RelationalDataset parse_dataset(std::istream& in) {
  RelationalDataset ds;
  bool have_header = false;
  std::string raw;
  std::size_t line_no = 0;
  std::vector<double> row;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = tokenize(line);
    if (tok.empty()) continue;
    if (!have_header) {
      if (tok.size() != 6 || tok[0] != "N" || tok[2] != "R" || tok[4] != "D") {
        throw ParseError(line_no, "expected header 'N <n> R <r> D <d>'");
      }
      const long n = parse_int(tok[1], line_no);
      const long r = parse_int(tok[3], line_no);
      const long d = parse_int(tok[5], line_no);
      if (n < 0 || r < 0 || d < 0) throw ParseError(line_no, "header counts must be nonnegative");
      ds = RelationalDataset(static_cast<int>(n), static_cast<int>(r), static_cast<int>(d));
      have_header = true;
      continue;
    }
    try {
      if (tok[0] == "L") {
        if (tok.size() != 5) throw ParseError(line_no, "expected 'L rel i j y'");
        const long rel = parse_int(tok[1], line_no);
        const long i = parse_int(tok[2], line_no);
        const long j = parse_int(tok[3], line_no);
        const long y = parse_int(tok[4], line_no);
        if (y != 1 && y != -1) throw ParseError(line_no, "link value must be +1 or -1");
        ds.add_link(static_cast<int>(rel), static_cast<int>(i), static_cast<int>(j),
                    static_cast<int>(y));
      } else if (tok[0] == "F") {
        if (tok.size() < 3) throw ParseError(line_no, "expected 'F i j v1 ... vd'");
        const long i = parse_int(tok[1], line_no);
        const long j = parse_int(tok[2], line_no);
        row.clear();
        for (std::size_t t = 3; t < tok.size(); ++t) row.push_back(parse_real(tok[t], line_no));
        ds.set_pair_features(static_cast<int>(i), static_cast<int>(j), row);
      } else {
        throw ParseError(line_no, "unknown record type '" + std::string(tok[0]) + "'");
      }
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError(line_no, "missing header");
  return ds;
}

RelationalDataset load_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, const RelationalDataset& ds) {
  out << "N " << ds.n_entities() << " R " << ds.n_relations() << " D " << ds.feature_dim()
      << '\n';
  for (const auto& [i, j] : ds.feature_pairs()) {
    out << "F " << i << ' ' << j;
    for (double v : ds.pair_features(i, j)) out << ' ' << format_double(v);
    out << '\n';
  }
  for (const auto& l : ds.links()) {
    out << "L " << l.relation << ' ' << l.source << ' ' << l.target << ' '
        << (l.label > 0 ? "+1" : "-1") << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const RelationalDataset& ds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_dataset(out, ds);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

SplitMask split_holdout(const RelationalDataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split fraction must lie in (0, 1)");
  }
  if (ds.size() == 0) throw std::invalid_argument("cannot split an empty dataset");
  SplitMask all;
  all.observed.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) all.observed[i] = i;
  return split_observed(all, fraction, seed);
}

SplitMask split_observed(const SplitMask& split, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order = split.observed;
  std::sort(order.begin(), order.end());
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
  SplitMask out;
  out.seed = seed;
  out.heldout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_held));
  out.observed.assign(order.begin() + static_cast<std::ptrdiff_t>(n_held), order.end());
  std::sort(out.heldout.begin(), out.heldout.end());
  std::sort(out.observed.begin(), out.observed.end());
  return out;
}

void write_split(const std::filesystem::path& path, const RelationalDataset& ds,
                 const SplitMask& split) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (auto idx : split.heldout) {
    const auto& l = ds.link(idx);
    out << l.relation << ' ' << l.source << ' ' << l.target << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

SplitMask read_split(const std::filesystem::path& path, const RelationalDataset& ds) {
  auto in = open_input(path);
  std::vector<char> held(ds.size(), 0);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = tokenize(line);
    if (tok.empty()) continue;
    if (tok.size() != 3) throw ParseError(line_no, "expected 'rel i j'");
    const auto rel = static_cast<int>(parse_int(tok[0], line_no));
    const auto i = static_cast<int>(parse_int(tok[1], line_no));
    const auto j = static_cast<int>(parse_int(tok[2], line_no));
    auto idx = ds.find_link(rel, i, j);
    if (!idx) {
      throw ValidationError("line " + std::to_string(line_no) + ": split lists a triple absent from the dataset");
    }
    held[*idx] = 1;
  }
  SplitMask split;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (held[i] ? split.heldout : split.observed).push_back(i);
  }
  return split;
}

RelationSlice slice_relation(const RelationalDataset& ds, const SplitMask& split, int relation) {
  if (relation < 0 || relation >= ds.n_relations()) {
    throw std::invalid_argument("relation index out of range");
  }
  RelationSlice slice;
  slice.dataset = RelationalDataset(ds.n_entities(), 1, ds.feature_dim());
  for (const auto& [i, j] : ds.feature_pairs()) slice.dataset.set_pair_features(i, j, ds.pair_features(i, j));
  if (!ds.names().empty()) slice.dataset.set_names(ds.names());
  std::vector<std::size_t> local(ds.size(), static_cast<std::size_t>(-1));
  for (std::size_t idx = 0; idx < ds.size(); ++idx) {
    const auto& l = ds.link(idx);
    if (l.relation != relation) continue;
    local[idx] = slice.source_links.size();
    slice.source_links.push_back(idx);
    slice.dataset.add_link(0, l.source, l.target, l.label);
  }
  slice.split.seed = split.seed;
  for (auto idx : split.observed) {
    if (local[idx] != static_cast<std::size_t>(-1)) slice.split.observed.push_back(local[idx]);
  }
  for (auto idx : split.heldout) {
    if (local[idx] != static_cast<std::size_t>(-1)) slice.split.heldout.push_back(local[idx]);
  }
  return slice;
}

double SyntheticData::oracle_score(int source, int target) const {
  return z.row(source) * w * z.row(target).transpose();
}

SyntheticData synth_generate(int n, int k_true, std::uint64_t seed, double feature_density,
                             double weight_scale, double noise_ratio) {
  if (n < 2) throw std::invalid_argument("synth_generate: n must be at least 2");
  if (k_true < 1) throw std::invalid_argument("synth_generate: k_true must be at least 1");
  if (!(feature_density >= 0.0 && feature_density <= 1.0)) {
    throw std::invalid_argument("synth_generate: feature_density must lie in [0, 1]");
  }
  if (weight_scale < 0.0 || noise_ratio < 0.0) {
    throw std::invalid_argument("synth_generate: scales must be nonnegative");
  }
  Rng rng(seed);
  SyntheticData out;
  out.z = Eigen::MatrixXd::Zero(n, k_true);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < k_true; ++k) out.z(i, k) = rng.bernoulli(feature_density) ? 1.0 : 0.0;
  }
  out.w = Eigen::MatrixXd::Zero(k_true, k_true);
  for (int k = 0; k < k_true; ++k) {
    for (int l = k; l < k_true; ++l) {
      out.w(k, l) = out.w(l, k) = weight_scale * rng.normal();
    }
  }
  const Eigen::MatrixXd scores = out.z * out.w * out.z.transpose();
  const double mean = scores.mean();
  const double var = (scores.array() - mean).square().mean();
  out.noise_std = var > 0.0 ? noise_ratio * std::sqrt(var) : noise_ratio;

  out.dataset = RelationalDataset(n, 1, 0);
  std::size_t positives = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double value = scores(i, j) + out.noise_std * rng.normal();
      const int label = value > 0.0 ? 1 : -1;
      positives += label > 0 ? 1 : 0;
      out.dataset.add_link(0, i, j, label);
    }
  }
  out.link_density = static_cast<double>(positives) / static_cast<double>(n * n);
  return out;
}

}  // namespace medlfrm
