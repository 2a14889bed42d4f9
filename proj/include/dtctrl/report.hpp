#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace dtctrl {

std::string format_double(double v);

/// Ordered key/value report. The structured rendering is the byte-stable
/// `key = value` contract; the text rendering reuses exactly the same value
/// strings so no number exists in one and not the other.
class Report {
 public:
  void put(const std::string& key, const std::string& value);
  void put(const std::string& key, const char* value);
  void put(const std::string& key, double value);
  void put(const std::string& key, int value);
  void put(const std::string& key, std::uint64_t value);
  void put(const std::string& key, const Eigen::VectorXd& value);
  void put(const std::string& key, const Eigen::RowVectorXd& value);
  void section(const std::string& name);  // text-only divider, no value

  std::string structured() const;
  std::string text(const std::string& title) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;  // key "" = section
};

}  // namespace dtctrl
