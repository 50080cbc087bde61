#include "pairview/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "pairview/errors.hpp"
#include "pairview/rng.hpp"

namespace pairview::data {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

struct CsvTable {
  std::vector<std::string> columns;  // header minus the id column
  std::vector<std::string> ids;
  Matrix values;
};

CsvTable read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  auto header = split_csv_line(line);
  if (header.size() < 2) throw DataError("header needs an id column and at least one feature: " + path);

  CsvTable t;
  t.columns.assign(header.begin() + 1, header.end());
  std::unordered_set<std::string> seen;
  for (const auto& name : t.columns) {
    if (!seen.insert(name).second)
      throw DataError("duplicate feature name '" + name + "' in " + path);
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
    t.ids.push_back(cells[0]);
    std::vector<double> row(cells.size() - 1);
    for (std::size_t j = 1; j < cells.size(); ++j) {
      try {
        std::size_t pos = 0;
        row[j - 1] = std::stod(cells[j], &pos);
        if (pos != cells[j].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric cell '" + cells[j] +
                        "' for sample '" + cells[0] + "', feature '" + header[j] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows in " + path);

  t.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(t.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < t.columns.size(); ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PairedDataset load_paired_csv(const std::string& x_path, const std::string& y_path,
                              const std::optional<std::string>& meta_path) {
  CsvTable xt = read_csv_matrix(x_path);
  CsvTable yt = read_csv_matrix(y_path);

  std::unordered_map<std::string, Eigen::Index> y_by_id;
  for (std::size_t i = 0; i < yt.ids.size(); ++i) {
    if (!y_by_id.emplace(yt.ids[i], static_cast<Eigen::Index>(i)).second)
      throw DataError("duplicate sample id '" + yt.ids[i] + "' in " + y_path);
  }
  std::unordered_set<std::string> x_ids(xt.ids.begin(), xt.ids.end());
  if (x_ids.size() != xt.ids.size()) throw DataError("duplicate sample ids in " + x_path);

  std::string missing;
  for (const auto& id : xt.ids)
    if (!y_by_id.count(id)) missing += (missing.empty() ? "" : ", ") + id;
  for (const auto& id : yt.ids)
    if (!x_ids.count(id)) missing += (missing.empty() ? "" : ", ") + id;
  if (!missing.empty())
    throw DataError("sample sets differ between views; unmatched ids: " + missing);

  PairedDataset ds;
  ds.x = xt.values;
  ds.x_names = xt.columns;
  ds.y_names = yt.columns;
  ds.sample_ids = xt.ids;
  ds.y.resize(xt.values.rows(), yt.values.cols());
  for (std::size_t i = 0; i < xt.ids.size(); ++i)
    ds.y.row(static_cast<Eigen::Index>(i)) = yt.values.row(y_by_id.at(xt.ids[i]));

  if (meta_path) {
    std::ifstream in(*meta_path);
    if (!in) throw DataError("cannot open file: " + *meta_path);
    std::string line;
    std::getline(in, line);  // header: id,label,color
    std::unordered_map<std::string, std::pair<std::string, std::string>> meta;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto cells = split_csv_line(line);
      if (cells.size() < 3) throw DataError("meta row needs id,label,color: " + *meta_path);
      meta[cells[0]] = {cells[1], cells[2]};
    }
    ds.sample_labels.resize(xt.ids.size());
    ds.sample_colors.resize(xt.ids.size());
    for (std::size_t i = 0; i < xt.ids.size(); ++i) {
      auto it = meta.find(xt.ids[i]);
      if (it != meta.end()) {
        ds.sample_labels[i] = it->second.first;
        ds.sample_colors[i] = it->second.second;
      }
    }
  }
  return ds;
}

void save_paired_csv(const PairedDataset& ds, const std::string& x_path,
                     const std::string& y_path, const std::optional<std::string>& meta_path) {
  auto write_view = [&](const std::string& path, const Matrix& m,
                        const std::vector<std::string>& names) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "id";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out << ds.sample_ids[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_full(m(i, j));
      out << '\n';
    }
  };
  write_view(x_path, ds.x, ds.x_names);
  write_view(y_path, ds.y, ds.y_names);
  if (meta_path && !ds.sample_labels.empty()) {
    std::ofstream out(*meta_path);
    if (!out) throw DataError("cannot write file: " + *meta_path);
    out << "id,label,color\n";
    for (std::size_t i = 0; i < ds.sample_ids.size(); ++i) {
      out << ds.sample_ids[i] << ',' << ds.sample_labels[i] << ','
          << (i < ds.sample_colors.size() ? ds.sample_colors[i] : "") << '\n';
    }
  }
}

Matrix normalize_depth(const Matrix& counts) {
  if ((counts.array() < 0).any()) throw DataError("normalize_depth: negative entry");
  Vector sums = counts.rowwise().sum();
  for (Eigen::Index i = 0; i < sums.size(); ++i)
    if (sums(i) <= 0)
      throw DataError("normalize_depth: zero-sum row " + std::to_string(i));
  std::vector<double> sorted(sums.data(), sums.data() + sums.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  Matrix out = counts;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= median / sums(i);
  return out;
}

Matrix log_transform(const Matrix& m) {
  if ((m.array() < 0).any()) throw DataError("log_transform: negative entry");
  return ((m.array() + 1.0).log() / std::log(2.0)).matrix();
}

PairedDataset select_hvg(const PairedDataset& ds, int n_genes) {
  const Eigen::Index p = ds.p();
  if (n_genes < 1 || n_genes > p)
    throw ArgumentError("select_hvg: n_genes must be in [1, p]");
  Vector means = ds.x.colwise().mean();
  std::vector<std::pair<double, Eigen::Index>> var(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    const double v = (ds.x.col(j).array() - means(j)).square().sum() / ds.x.rows();
    var[static_cast<std::size_t>(j)] = {v, j};
  }
  // Highest variance first; ties to the lower column index.
  std::stable_sort(var.begin(), var.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  std::vector<Eigen::Index> keep;
  for (int i = 0; i < n_genes; ++i) keep.push_back(var[static_cast<std::size_t>(i)].second);
  std::sort(keep.begin(), keep.end());

  PairedDataset out = ds;
  out.x.resize(ds.n(), n_genes);
  out.x_names.clear();
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.x.col(static_cast<Eigen::Index>(j)) = ds.x.col(keep[j]);
    out.x_names.push_back(ds.x_names[static_cast<std::size_t>(keep[j])]);
  }
  return out;
}

Matrix Standardizer::apply(const Matrix& m) const {
  if (m.cols() != means.size())
    throw ArgumentError("Standardizer: column count mismatch");
  Matrix out = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    out.col(j) = (m.col(j).array() - means(j)) / sds(j);
  return out;
}

Standardizer zscore_fit(const Matrix& train) {
  Standardizer s;
  s.means = train.colwise().mean();
  s.sds.resize(train.cols());
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    const double var = (train.col(j).array() - s.means(j)).square().sum() / train.rows();
    if (var <= 0)
      throw DataError("zscore_fit: constant column " + std::to_string(j));
    s.sds(j) = std::sqrt(var);
  }
  return s;
}

PairedDataset preprocess(const PairedDataset& ds, const PreprocessOptions& opts) {
  PairedDataset out = ds;
  if (opts.depth_normalize) out.x = normalize_depth(out.x);
  if (opts.log) out.x = log_transform(out.x);
  if (opts.hvg > 0 && opts.hvg < out.p()) out = select_hvg(out, opts.hvg);
  if (opts.zscore) {
    out.x = zscore_fit(out.x).apply(out.x);
    out.y = zscore_fit(out.y).apply(out.y);
  }
  return out;
}

std::pair<PairedDataset, SynthGroundTruth> synth_generate(int n, int p, int q,
                                                          const SynthGroundTruth& truth,
                                                          std::uint64_t seed) {
  const int s = static_cast<int>(truth.support.size());
  if (s > p) throw ArgumentError("synth_generate: |support| > p");
  if (s < 1) throw ArgumentError("synth_generate: empty support");
  if (truth.latent_dim < 1) throw ArgumentError("synth_generate: latent_dim < 1");
  for (int idx : truth.support)
    if (idx < 0 || idx >= p) throw ArgumentError("synth_generate: support index out of range");

  Rng rng(seed);
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();

  Matrix a(s, truth.latent_dim);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal() / std::sqrt(double(s));
  Matrix b(truth.latent_dim, q);
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) = rng.normal();
  Matrix c(truth.latent_dim, q);
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = rng.normal();

  Matrix xs(n, s);
  for (int j = 0; j < s; ++j) xs.col(j) = x.col(truth.support[static_cast<std::size_t>(j)]);
  Matrix z = xs * a;

  Matrix y;
  if (truth.link == Link::Linear) {
    y = z * b;
  } else {
    y = z.array().tanh().matrix() * b + (z.array() * z.array()).matrix() * c;
  }
  if (truth.noise_sd > 0) {
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) += truth.noise_sd * rng.normal();
  }

  PairedDataset ds;
  ds.x = std::move(x);
  ds.y = std::move(y);
  for (int j = 0; j < p; ++j) ds.x_names.push_back("gene_" + std::to_string(j));
  for (int j = 0; j < q; ++j) ds.y_names.push_back("feat_" + std::to_string(j));
  for (int i = 0; i < n; ++i) ds.sample_ids.push_back("s" + std::to_string(i));
  return {std::move(ds), truth};
}

}  // namespace pairview::data
