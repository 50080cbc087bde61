#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pairview/sbnn.hpp"
#include "pairview/srrr.hpp"
#include "pairview/types.hpp"

namespace pairview::viz {

// Bottleneck activations (n x bottleneck).
Matrix extract_latent(const sbnn::SbnnModel& model, const Matrix& x);
// X W restricted to the first 2 columns for rank-2, all r columns otherwise.
Matrix extract_latent(const srrr::RrrModel& model, const Matrix& x);

// Exact (O(n^2)) t-SNE. Per-row bandwidths matched to the perplexity by
// binary search; early exaggeration x12 for the first 250 iterations;
// momentum 0.5 then 0.8 after iteration 250; learning rate n/12.
// kl_trace, when given, receives KL(P||Q) per iteration.
Matrix tsne_exact(const Matrix& latent, double perplexity, int iters, std::uint64_t seed,
                  std::vector<double>* kl_trace = nullptr);

// Row-conditional affinities (each row sums to 1) for the given perplexity;
// exposed for verification.
Matrix tsne_conditional_p(const Matrix& latent, double perplexity);

struct LatentEmbedding {
  Matrix coords;  // n x 2
  std::string source;  // "direct_bottleneck" | "tsne_of_bottleneck" | "srrr_components"
  std::vector<std::string> colors;  // empty or n hex strings
  std::vector<std::string> labels;  // empty or n
};

// Value in [-1, 1] (clipped) through the 256-step dark-blue -> teal -> green
// -> yellow table. Anchors: #00008b, #008080, #00c000, #ffff00.
std::array<int, 3> colormap_color(double v);
std::string colormap_hex(double v);

// Writes base.svg plus one <name>.svg per overlay and an index.json listing
// panels and value ranges. Returns the written paths. Byte-deterministic for
// identical inputs.
std::vector<std::string> render_latent_svg(
    const LatentEmbedding& embedding,
    const std::vector<std::pair<std::string, Vector>>& overlays, const std::string& out_dir);

}  // namespace pairview::viz
