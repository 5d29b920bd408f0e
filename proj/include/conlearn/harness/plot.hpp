#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "conlearn/harness/grid.hpp"
#include "conlearn/text.hpp"

namespace conlearn::harness {

/// One bar: the best H_beta of a (mechanism, loss type) pair and the row it came from.
struct Bar {
  std::string mechanism, loss;
  double value = 0.0;
  Record source;
};

inline std::vector<std::string> loss_order(const std::vector<Record>& rows) {
  std::vector<std::string> order{"none", "soft", "binary", "real"};
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.loss) == order.end()) order.push_back(r.loss);
  std::vector<std::string> out;
  for (const auto& l : order)
    if (std::any_of(rows.begin(), rows.end(), [&](const Record& r) { return r.loss == l; })) out.push_back(l);
  return out;
}

/// Bars for one task and beta index, grouped by mechanism in canonical order.
/// Within a (mechanism, loss) pair the top-ranked row (see top_by_hbeta) wins.
inline std::vector<Bar> plot_bars(const Table& t, const std::string& task, std::size_t b) {
  const auto rows = summary_rows(t, task);
  std::vector<Bar> bars;
  for (const auto& m : mechanisms_in(rows))
    for (const auto& l : loss_order(rows)) {
      Table sub{t.betas, {}};
      for (const auto& r : rows)
        if (r.loss == l) sub.rows.push_back(r);
      auto top = top_by_hbeta(sub, task, m, b, 1);
      if (!top.empty()) bars.push_back({m, l, top.front().hbeta[b], top.front()});
    }
  return bars;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string loss_color(const std::string& loss) {
  if (loss == "none") return "#7f7f7f";
  if (loss == "soft") return "#2ca02c";
  if (loss == "binary") return "#1f77b4";
  if (loss == "real") return "#d62728";
  return "#9467bd";
}

}  // namespace detail

/// Grouped bar chart: one group per mechanism, one colour per loss type, y axis
/// fixed to [0, 1]. Each bar carries its exact value in data-value.
inline void write_svg(std::ostream& os, const std::vector<Bar>& bars, const std::string& title) {
  using detail::xml_escape;
  const double left = 60, top = 40, plot_h = 300, bar_w = 28, gap = 24, legend_w = 120;
  std::vector<std::string> groups, losses;
  for (const auto& b : bars) {
    if (std::find(groups.begin(), groups.end(), b.mechanism) == groups.end()) groups.push_back(b.mechanism);
    if (std::find(losses.begin(), losses.end(), b.loss) == losses.end()) losses.push_back(b.loss);
  }
  std::vector<double> group_x;
  double x = left + gap;
  for (const auto& g : groups) {
    group_x.push_back(x);
    x += bar_w * static_cast<double>(std::count_if(bars.begin(), bars.end(), [&](const Bar& b) { return b.mechanism == g; })) + gap;
  }
  const double plot_w = std::max(x - left, 200.0);
  const double width = left + plot_w + legend_w, height = top + plot_h + 70;
  auto f = [](double v) { return text::format_double(v); };
  const double y0 = top + plot_h;

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f(width) << "\" height=\"" << f(height)
     << "\" viewBox=\"0 0 " << f(width) << ' ' << f(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << f(left) << "\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0, y = y0 - v * plot_h;
    os << "<line x1=\"" << f(left) << "\" y1=\"" << f(y) << "\" x2=\"" << f(left + plot_w) << "\" y2=\"" << f(y)
       << "\" stroke=\"#dddddd\"/>\n"
       << "<text x=\"" << f(left - 6) << "\" y=\"" << f(y + 4) << "\" text-anchor=\"end\">" << text::format_fixed(v, 1)
       << "</text>\n";
  }
  os << "<line x1=\"" << f(left) << "\" y1=\"" << f(top) << "\" x2=\"" << f(left) << "\" y2=\"" << f(y0)
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << f(left) << "\" y1=\"" << f(y0) << "\" x2=\"" << f(left + plot_w) << "\" y2=\"" << f(y0)
     << "\" stroke=\"black\"/>\n";
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    double bx = group_x[gi];
    os << "<g class=\"group\" data-mechanism=\"" << xml_escape(groups[gi]) << "\">\n";
    for (const auto& b : bars) {
      if (b.mechanism != groups[gi]) continue;
      const double h = std::clamp(b.value, 0.0, 1.0) * plot_h;
      os << "<rect class=\"bar\" x=\"" << f(bx) << "\" y=\"" << f(y0 - h) << "\" width=\"" << f(bar_w - 2)
         << "\" height=\"" << f(h) << "\" fill=\"" << detail::loss_color(b.loss) << "\" data-loss=\""
         << xml_escape(b.loss) << "\" data-value=\"" << f(b.value) << "\"><title>"
         << xml_escape(b.loss + " / " + b.source.strategy + " / " + b.source.logic + ": " + f(b.value))
         << "</title></rect>\n";
      bx += bar_w;
    }
    const double mid = (group_x[gi] + bx) / 2.0;
    os << "<text x=\"" << f(mid) << "\" y=\"" << f(y0 + 16) << "\" text-anchor=\"middle\">" << xml_escape(groups[gi])
       << "</text>\n</g>\n";
  }
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double ly = top + 16.0 * static_cast<double>(i);
    os << "<rect x=\"" << f(left + plot_w + 14) << "\" y=\"" << f(ly) << "\" width=\"10\" height=\"10\" fill=\""
       << detail::loss_color(losses[i]) << "\"/>\n"
       << "<text x=\"" << f(left + plot_w + 28) << "\" y=\"" << f(ly + 9) << "\">" << xml_escape(losses[i])
       << "</text>\n";
  }
  os << "</svg>\n";
}

inline std::string plot_file_name(const std::string& task, double beta) {
  return task + "_hbeta_" + text::format_double(beta) + ".svg";
}

/// One SVG per (task, beta). Returns the files written; none when the table
/// has no usable rows.
inline std::vector<std::filesystem::path> emit_plots(const Table& t, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& task : tasks_in(t)) {
    if (summary_rows(t, task).empty()) continue;
    std::filesystem::create_directories(dir);
    for (std::size_t b = 0; b < t.betas.size(); ++b) {
      const auto path = dir / plot_file_name(task, t.betas[b]);
      std::ofstream f(path);
      if (!f) throw InputError("cannot write " + path.string());
      write_svg(f, plot_bars(t, task, b), task + ": best H_beta per mechanism, beta = " + text::format_double(t.betas[b]));
      out.push_back(path);
    }
  }
  return out;
}

}  // namespace conlearn::harness
