#include "pairview/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "pairview/errors.hpp"
#include "pairview/rng.hpp"

namespace pairview::viz {

Matrix extract_latent(const sbnn::SbnnModel& model, const Matrix& x) {
  return sbnn::forward(model, x).latent;
}

Matrix extract_latent(const srrr::RrrModel& model, const Matrix& x) {
  if (x.cols() != model.w.rows()) throw ArgumentError("extract_latent: column count mismatch");
  const Matrix z = x * model.w;
  if (model.rank == 2) return z.leftCols(2);
  return z;
}

Matrix tsne_conditional_p(const Matrix& latent, double perplexity) {
  const Eigen::Index n = latent.rows();
  if (static_cast<double>(n) < 3.0 * perplexity)
    throw ArgumentError("tsne: perplexity too large for n");
  const double target_entropy = std::log(perplexity);

  // Pairwise squared distances.
  Vector sq = latent.rowwise().squaredNorm();
  Matrix d2 = (-2.0 * (latent * latent.transpose())).rowwise() + sq.transpose();
  d2.colwise() += sq;
  d2.diagonal().setZero();

  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    Eigen::ArrayXd row;
    for (int it = 0; it < 200; ++it) {
      row = (-beta * d2.row(i).transpose().array()).exp();
      row(i) = 0;
      const double sum = row.sum();
      // Shannon entropy of the normalized row.
      const double h = std::log(sum) + beta * (d2.row(i).transpose().array() * row).sum() / sum;
      const double diff = h - target_entropy;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {  // entropy too high: sharpen
        lo = beta;
        beta = std::isinf(hi) ? beta * 2 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    p.row(i) = (row / row.sum()).matrix().transpose();
  }
  return p;
}

Matrix tsne_exact(const Matrix& latent, double perplexity, int iters, std::uint64_t seed,
                  std::vector<double>* kl_trace) {
  const Eigen::Index n = latent.rows();
  const Matrix pc = tsne_conditional_p(latent, perplexity);
  Matrix p = (pc + pc.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);

  Rng rng(seed);
  Matrix y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) y(i, j) = 1e-4 * rng.normal();
  Matrix vel = Matrix::Zero(n, 2);
  const double lr = static_cast<double>(n) / 12.0;

  if (kl_trace) kl_trace->clear();
  for (int it = 0; it < iters; ++it) {
    const double exaggeration = it < 250 ? 12.0 : 1.0;
    const double momentum = it < 250 ? 0.5 : 0.8;

    Vector sq = y.rowwise().squaredNorm();
    Matrix d2 = (-2.0 * (y * y.transpose())).rowwise() + sq.transpose();
    d2.colwise() += sq;
    Matrix wmat = (1.0 + d2.array()).inverse().matrix();
    wmat.diagonal().setZero();
    const double wsum = wmat.sum();
    const Matrix q = (wmat / wsum).cwiseMax(1e-12);

    // grad_i = 4 * sum_j (P_ij - Q_ij) w_ij (y_i - y_j)
    Matrix mult = ((exaggeration * p - q).array() * wmat.array()).matrix();
    Vector rowsum = mult.rowwise().sum();
    Matrix grad = 4.0 * (rowsum.asDiagonal() * y - mult * y);

    vel = momentum * vel - lr * grad;
    y += vel;
    y.rowwise() -= y.colwise().mean();

    if (kl_trace) {
      double kl = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          if (i != j) kl += p(i, j) * std::log(p(i, j) / q(i, j));
      kl_trace->push_back(kl);
    }
  }
  return y;
}

namespace {

constexpr int kAnchors[4][3] = {{0x00, 0x00, 0x8b},   // dark blue
                                {0x00, 0x80, 0x80},   // teal
                                {0x00, 0xc0, 0x00},   // green
                                {0xff, 0xff, 0x00}};  // yellow

std::array<int, 3> table_entry(int idx) {
  const double t = static_cast<double>(idx) / 255.0 * 3.0;
  const int seg = std::min(2, static_cast<int>(t));
  const double f = t - seg;
  std::array<int, 3> c{};
  for (int ch = 0; ch < 3; ++ch) {
    c[static_cast<std::size_t>(ch)] = static_cast<int>(
        std::lround((1 - f) * kAnchors[seg][ch] + f * kAnchors[seg + 1][ch]));
  }
  return c;
}

std::string fmt_coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::array<int, 3> colormap_color(double v) {
  const double clipped = std::clamp(v, -1.0, 1.0);
  const int idx = static_cast<int>(std::lround((clipped + 1.0) / 2.0 * 255.0));
  return table_entry(idx);
}

std::string colormap_hex(double v) {
  const auto c = colormap_color(v);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

namespace {

std::string render_panel(const Matrix& coords, const std::vector<std::string>& colors) {
  const double canvas = 800.0, margin = 0.05 * canvas;
  const double xmin = coords.col(0).minCoeff(), xmax = coords.col(0).maxCoeff();
  const double ymin = coords.col(1).minCoeff(), ymax = coords.col(1).maxCoeff();
  // Equal aspect: one scale for both axes.
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  const double scale = (canvas - 2 * margin) / span;
  const double xoff = margin + 0.5 * ((canvas - 2 * margin) - (xmax - xmin) * scale);
  const double yoff = margin + 0.5 * ((canvas - 2 * margin) - (ymax - ymin) * scale);

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" "
         "height=\"800\" viewBox=\"0 0 800 800\">\n";
  svg += "<rect width=\"800\" height=\"800\" fill=\"#ffffff\"/>\n";
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const double cx = xoff + (coords(i, 0) - xmin) * scale;
    const double cy = canvas - (yoff + (coords(i, 1) - ymin) * scale);
    svg += "<circle cx=\"" + fmt_coord(cx) + "\" cy=\"" + fmt_coord(cy) +
           "\" r=\"3\" fill=\"" + colors[static_cast<std::size_t>(i)] + "\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

std::vector<std::string> render_latent_svg(
    const LatentEmbedding& embedding,
    const std::vector<std::pair<std::string, Vector>>& overlays, const std::string& out_dir) {
  const Eigen::Index n = embedding.coords.rows();
  if (embedding.coords.cols() != 2) throw ArgumentError("render_latent_svg: coords must be n x 2");
  if (!embedding.coords.allFinite()) throw NumericError("render_latent_svg: non-finite coords");
  for (const auto& [name, values] : overlays)
    if (values.size() != n)
      throw ArgumentError("render_latent_svg: overlay '" + name + "' length mismatch");

  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  json index;
  index["panels"] = json::array();

  auto write_file = [&](const std::string& filename, const std::string& content) {
    const std::string path = out_dir + "/" + filename;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
    written.push_back(path);
  };

  std::vector<std::string> base_colors(static_cast<std::size_t>(n), "#4682b4");
  if (!embedding.colors.empty())
    for (std::size_t i = 0; i < base_colors.size(); ++i)
      if (!embedding.colors[i].empty()) base_colors[i] = embedding.colors[i];
  write_file("base.svg", render_panel(embedding.coords, base_colors));
  index["panels"].push_back({{"name", "base"}, {"file", "base.svg"}, {"source", embedding.source}});

  for (const auto& [name, values] : overlays) {
    std::vector<std::string> colors;
    for (Eigen::Index i = 0; i < n; ++i) colors.push_back(colormap_hex(values(i)));
    write_file(name + ".svg", render_panel(embedding.coords, colors));
    index["panels"].push_back({{"name", name},
                               {"file", name + ".svg"},
                               {"min", values.minCoeff()},
                               {"max", values.maxCoeff()}});
  }

  {
    const std::string path = out_dir + "/index.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << index.dump(2) << '\n';
    written.push_back(path);
  }
  return written;
}

}  // namespace pairview::viz
