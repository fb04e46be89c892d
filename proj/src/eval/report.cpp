#include "handkin/eval/report.hpp"

#include "handkin/text_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace handkin::eval {
namespace {

constexpr const char* kResultsHeader =
    "participant_id,domain,window_ms,model,cv_x,cv_y,cv_z,trial_cv_x,trial_cv_y,trial_cv_z,test_rows,epochs,best_epoch";

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw Error("write failed for " + path.string());
}

std::string fixed(double v, int digits = 2) {
  if (std::isnan(v)) return "nan";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

// The decoder is the headline model; mLR is shown only when it is all there is.
std::string headline_model(const ReportTable& rt) {
  for (const auto& r : rt.rows) {
    if (r.model == "cnn_lstm") return r.model;
  }
  return rt.rows.empty() ? std::string("cnn_lstm") : rt.rows.front().model;
}

std::vector<Domain> domains_of(const ReportTable& rt) {
  std::vector<Domain> out;
  for (Domain d : {Domain::source, Domain::sensor}) {
    if (std::any_of(rt.rows.begin(), rt.rows.end(), [&](const CvResult& r) { return r.domain == d; })) {
      out.push_back(d);
    }
  }
  return out;
}

std::vector<int> windows_of(const ReportTable& rt) {
  if (!rt.windows_ms.empty()) return rt.windows_ms;
  std::set<int> w;
  for (const auto& r : rt.rows) w.insert(r.window_ms);
  return {w.begin(), w.end()};
}

}  // namespace

std::string results_csv(const std::vector<CvResult>& rows) {
  std::ostringstream os;
  os << kResultsHeader << '\n';
  for (const auto& r : rows) {
    os << r.participant_id << ',' << to_string(r.domain) << ',' << r.window_ms << ',' << r.model;
    for (double v : r.cv) os << ',' << format_double(v);
    for (double v : r.trial_cv) os << ',' << format_double(v);
    os << ',' << r.test_rows << ',' << r.epochs << ',' << r.best_epoch << '\n';
  }
  return os.str();
}

std::vector<CvResult> parse_results_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line) != kResultsHeader) throw Error("results CSV: unexpected header");
  std::vector<CvResult> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 13) throw Error("results CSV line " + std::to_string(lineno) + ": expected 13 fields");
    CvResult r;
    r.participant_id = f[0];
    r.domain = parse_domain(f[1]);
    r.window_ms = std::stoi(f[2]);
    r.model = f[3];
    for (std::size_t j = 0; j < 3; ++j) {
      r.cv[j] = parse_double(f[4 + j]);
      r.trial_cv[j] = parse_double(f[7 + j]);
    }
    r.test_rows = std::stoul(f[10]);
    r.epochs = std::stoul(f[11]);
    r.best_epoch = std::stoul(f[12]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string aggregates_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << "model,domain,window_ms,mean_x,mean_y,mean_z,std_x,std_y,std_z,n_x,n_y,n_z\n";
  for (const auto& a : rows) {
    os << a.model << ',' << to_string(a.domain) << ',' << a.window_ms;
    for (double v : a.mean) os << ',' << format_double(v);
    for (double v : a.std) os << ',' << format_double(v);
    for (auto n : a.count) os << ',' << n;
    os << '\n';
  }
  return os.str();
}

std::string text_table(const ReportTable& rt) {
  std::ostringstream os;
  const auto windows = windows_of(rt);
  const auto domains = domains_of(rt);
  std::vector<std::string> models;
  for (const auto& r : rt.rows) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
  }
  std::vector<std::string> participants;
  for (const auto& r : rt.rows) {
    if (std::find(participants.begin(), participants.end(), r.participant_id) == participants.end()) {
      participants.push_back(r.participant_id);
    }
  }
  constexpr std::size_t kCell = 11;
  std::size_t name_w = 12;
  for (const auto& p : participants) name_w = std::max(name_w, p.size() + 1);

  for (const auto& model : models) {
    os << "Correlation values (pooled over test windows), model: " << model << "\n";
    for (Domain d : domains) {
      os << "\n[" << to_string(d) << " domain]\n";
      os << std::string(name_w, ' ');
      for (int w : windows) os << " | " << pad(std::to_string(w) + " ms", 3 * kCell);
      os << '\n' << std::string(name_w, ' ');
      for (std::size_t i = 0; i < windows.size(); ++i) os << " | " << pad("x", kCell) << pad("y", kCell) << pad("z", kCell);
      os << '\n';
      for (const auto& p : participants) {
        os << std::left << std::setw(static_cast<int>(name_w)) << p << std::right;
        for (int w : windows) {
          auto it = std::find_if(rt.rows.begin(), rt.rows.end(), [&](const CvResult& r) {
            return r.model == model && r.domain == d && r.window_ms == w && r.participant_id == p;
          });
          os << " | ";
          for (std::size_t j = 0; j < 3; ++j) os << pad(it == rt.rows.end() ? "-" : fixed(it->cv[j]), kCell);
        }
        os << '\n';
      }
      os << std::left << std::setw(static_cast<int>(name_w)) << "Mean" << std::right;
      for (int w : windows) {
        auto it = std::find_if(rt.aggregates.begin(), rt.aggregates.end(), [&](const AggregateRow& a) {
          return a.model == model && a.domain == d && a.window_ms == w;
        });
        os << " | ";
        for (std::size_t j = 0; j < 3; ++j) {
          os << pad(it == rt.aggregates.end() ? "-" : fixed(it->mean[j]) + "±" + fixed(it->std[j]), kCell + 1);
        }
      }
      os << '\n';
    }
    os << '\n';
  }
  if (!rt.failures.empty()) {
    os << "Failed cells:\n";
    for (const auto& f : rt.failures) {
      os << "  " << f.participant_id << ", " << to_string(f.domain) << ", " << f.window_ms << " ms: " << f.message
         << '\n';
    }
  }
  return os.str();
}

std::string svg_chart(const ReportTable& rt) {
  const auto windows = windows_of(rt);
  const auto domains = domains_of(rt);
  const std::string model = headline_model(rt);
  static constexpr const char* kAxes[] = {"x", "y", "z"};
  static constexpr const char* kColors[2][3] = {{"#1f4e79", "#2e75b6", "#9dc3e6"}, {"#833c0b", "#c55a11", "#f4b183"}};

  const double bar_w = 14.0, group_gap = 30.0, left = 60.0, top = 40.0, plot_h = 260.0;
  const std::size_t bars = domains.size() * 3;
  const double group_w = static_cast<double>(bars) * bar_w;
  const double width = left + static_cast<double>(windows.size()) * (group_w + group_gap) + 160.0;
  const double height = top + plot_h + 60.0;
  // CV axis spans [-1, 1] when anything is negative, [0, 1] otherwise.
  bool any_negative = false;
  for (const auto& a : rt.aggregates) {
    for (double v : a.mean) any_negative = any_negative || (!std::isnan(v) && v < 0.0);
  }
  const double y_min = any_negative ? -1.0 : 0.0;
  auto y_of = [&](double v) { return top + (1.0 - v) / (1.0 - y_min) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">Mean CV per window ("
     << model << ")</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << y_of(0.0) << "\" x2=\"" << width - 150.0 << "\" y2=\"" << y_of(0.0)
     << "\" stroke=\"black\"/>\n";
  for (double t = y_min; t <= 1.0 + 1e-9; t += 0.25) {
    os << "<text x=\"" << left - 8 << "\" y=\"" << y_of(t) + 4 << "\" font-family=\"sans-serif\" font-size=\"10\" "
       << "text-anchor=\"end\">" << fixed(t) << "</text>\n";
  }
  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    const int w = windows[wi];
    const double gx = left + group_gap / 2 + static_cast<double>(wi) * (group_w + group_gap);
    os << "<g class=\"bar-group\" data-window-ms=\"" << w << "\">\n";
    for (std::size_t di = 0; di < domains.size(); ++di) {
      auto it = std::find_if(rt.aggregates.begin(), rt.aggregates.end(), [&](const AggregateRow& a) {
        return a.model == model && a.domain == domains[di] && a.window_ms == w;
      });
      for (std::size_t j = 0; j < 3; ++j) {
        const double v = it == rt.aggregates.end() ? std::nan("") : it->mean[j];
        if (std::isnan(v)) continue;
        const double x = gx + static_cast<double>(di * 3 + j) * bar_w;
        const double y0 = y_of(std::max(v, 0.0));
        const double h = std::abs(y_of(v) - y_of(0.0));
        os << "  <rect x=\"" << x << "\" y=\"" << y0 << "\" width=\"" << bar_w - 2 << "\" height=\"" << h
           << "\" fill=\"" << kColors[static_cast<int>(domains[di]) % 2][j] << "\"><title>" << to_string(domains[di])
           << ' ' << kAxes[j] << ": " << fixed(v, 3) << "</title></rect>\n";
      }
    }
    os << "  <text x=\"" << gx + group_w / 2 << "\" y=\"" << top + plot_h + 20
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << w << " ms</text>\n";
    os << "</g>\n";
  }
  double ly = top;
  for (std::size_t di = 0; di < domains.size(); ++di) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double lx = width - 140.0;
      os << "<rect x=\"" << lx << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\""
         << kColors[static_cast<int>(domains[di]) % 2][j] << "\"/>";
      os << "<text x=\"" << lx + 14 << "\" y=\"" << ly + 9 << "\" font-family=\"sans-serif\" font-size=\"10\">"
         << to_string(domains[di]) << ' ' << kAxes[j] << "</text>\n";
      ly += 16.0;
    }
  }
  os << "</svg>\n";
  return os.str();
}

ReportFiles emit_report(const ReportTable& rt, const std::filesystem::path& out_dir) {
  if (rt.rows.empty()) throw Error("emit_report: the report table is empty");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());
  ReportFiles f{out_dir / "results.csv", out_dir / "aggregates.csv", out_dir / "table.txt", out_dir / "cv_by_window.svg"};
  write_file(f.results_csv, results_csv(rt.rows));
  write_file(f.aggregates_csv, aggregates_csv(rt.aggregates));
  write_file(f.table_txt, text_table(rt));
  write_file(f.chart_svg, svg_chart(rt));
  return f;
}

}  // namespace handkin::eval
