#include "dtctrl/report.hpp"

#include <cstdio>

namespace dtctrl {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void Report::put(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}

void Report::put(const std::string& key, const char* value) {
  entries_.emplace_back(key, std::string(value));
}

void Report::put(const std::string& key, double value) { put(key, format_double(value)); }

void Report::put(const std::string& key, int value) { put(key, std::to_string(value)); }

void Report::put(const std::string& key, std::uint64_t value) { put(key, std::to_string(value)); }

void Report::put(const std::string& key, const Eigen::VectorXd& value) {
  std::string s;
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    if (i) s += ' ';
    s += format_double(value(i));
  }
  put(key, s);
}

void Report::put(const std::string& key, const Eigen::RowVectorXd& value) {
  put(key, Eigen::VectorXd(value.transpose()));
}

void Report::section(const std::string& name) { entries_.emplace_back(std::string(), name); }

std::string Report::structured() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    if (k.empty()) continue;
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

std::string Report::text(const std::string& title) const {
  std::string out = title + "\n";
  out.append(title.size(), '-');
  out += '\n';
  for (const auto& [k, v] : entries_) {
    if (k.empty()) {
      out += "\n[";
      out += v;
      out += "]\n";
    } else {
      out += "  ";
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
  }
  return out;
}

}  // namespace dtctrl
