#include "churnforge/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "churnforge/error.hpp"
#include "churnforge/util.hpp"

namespace churnforge {

double RocCurve::trapezoid_area() const {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return area;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "scores and labels differ in length");
  std::uint64_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw Error(ErrorCode::InvalidArgument, "NaN score");
    (labels[i] == Label::Churn ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) throw Error(ErrorCode::InvalidArgument, "AUC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  // Twice the Mann-Whitney U, kept integral so ties cost no precision.
  std::uint64_t twice_u = 0, tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    std::uint64_t gp = 0, gn = 0;
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] == Label::Churn ? gp : gn) += 1;
    twice_u += gn * (2 * tp + gp);
    tp += gp;
    fp += gn;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), s});
  }
  curve.auc = static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return curve;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "fpr,tpr,threshold\n";
  for (const auto& p : curve.points) {
    out << format_double(p.fpr) << ',' << format_double(p.tpr) << ',' << format_double(p.threshold) << '\n';
  }
}

std::string roc_svg(std::span<const std::pair<std::string, RocCurve>> curves) {
  constexpr double size = 400, margin = 50;
  constexpr std::array<std::string_view, 6> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  auto px = [&](double x) { return margin + x * size; };
  auto py = [&](double y) { return margin + (1.0 - y) * size; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n",
      size + 2 * margin);
  svg += fmt::format("<rect x=\"{0}\" y=\"{0}\" width=\"{1}\" height=\"{1}\" fill=\"none\" stroke=\"#444\"/>\n",
                     margin, size);
  svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n",
                     px(0), py(0), px(1), py(1));
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">False positive rate</text>\n", px(0.5),
                     size + 1.7 * margin);
  svg += fmt::format("<text x=\"{0}\" y=\"{1}\" text-anchor=\"middle\" transform=\"rotate(-90 {0} {1})\">True "
                     "positive rate</text>\n",
                     margin * 0.4, py(0.5));
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& [name, curve] = curves[c];
    const auto colour = palette[c % palette.size()];
    std::string pts;
    for (const auto& p : curve.points) pts += fmt::format("{:.2f},{:.2f} ", px(p.fpr), py(p.tpr));
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", colour, pts);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{} (AUC {:.3f})</text>\n", px(0.45),
                       py(0.05) - 16.0 * static_cast<double>(curves.size() - 1 - c), colour, name, curve.auc);
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<FeatureImportance> feature_importance(const TrainedModel& model) {
  std::vector<FeatureImportance> out;
  double total = 0.0;
  for (std::size_t f = 0; f < model.feature_gain.size() && f < model.schema.size(); ++f) {
    if (model.feature_gain[f] > 0) {
      out.push_back({model.schema[f].name, model.feature_gain[f], 0.0});
      total += model.feature_gain[f];
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.gain != b.gain ? a.gain > b.gain : a.feature < b.feature;
  });
  for (auto& fi : out) fi.share = fi.gain / total;
  return out;
}

}  // namespace churnforge
