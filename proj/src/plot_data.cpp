#include "edgecache/plot_data.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "edgecache/config.hpp"
#include "edgecache/errors.hpp"

namespace edgecache {

namespace {

namespace fs = std::filesystem;

// Splits one CSV line; double quotes group fields containing commas.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("plot data: cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split_csv(line));
  }
  return rows;
}

struct Series {
  // window index -> (sum, count)
  std::map<std::size_t, std::pair<double, std::size_t>> points;
};

}  // namespace

void emit_plot_data(const fs::path& results_dir, int figure, std::ostream& out) {
  std::string expected_kind;
  std::size_t column = 1;  // avg_hit_rate
  switch (figure) {
    case 3: expected_kind = "compare"; break;
    case 4: expected_kind = "compare"; column = 2; break;
    case 5: expected_kind = "sweep-PxQ"; break;
    case 6: expected_kind = "sweep-FxB"; break;
    default: throw ConfigError("plot data: figure must be 3, 4, 5 or 6");
  }

  const auto manifest = read_csv(results_dir / "manifest.csv");
  // Keep series in first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, Series> series;
  for (const auto& row : manifest) {
    if (row.size() < 5) throw ConfigError("plot data: malformed manifest row");
    if (row[0] != expected_kind) {
      throw ConfigError("plot data: figure " + std::to_string(figure) + " needs " +
                        expected_kind + " results, found " + row[0]);
    }
    const std::string& label = row[1];
    if (!series.contains(label)) order.push_back(label);
    auto& s = series[label];
    const auto windows = read_csv(results_dir / row[4]);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (windows[i].size() <= column || windows[i][column].empty()) continue;
      auto& [sum, count] = s.points[i];
      sum += std::stod(windows[i][column]);
      count += 1;
    }
  }

  out << "figure,series,x,y\n";
  for (const auto& label : order) {
    const auto& s = series[label];
    if (s.points.empty()) continue;  // baselines carry no discrepancy
    for (const auto& [x, acc] : s.points) {
      out << figure << ",\"" << label << "\"," << x << ','
          << format_number(acc.first / static_cast<double>(acc.second)) << '\n';
    }
  }
}

}  // namespace edgecache
