#pragma once

#include <string>
#include <vector>

namespace roiadapt::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Bar {
  std::string label;
  double value = 0.0;
};

struct AxisRange {
  double min = 0.0;
  double max = 1.0;
};

// Y range covering every point of every series, widened if degenerate.
AxisRange y_range(const std::vector<Series>& series);

// Static charts; output is a pure function of the inputs. Throws DomainError
// when there is nothing to draw.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, const std::string& comment = {});
std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars,
                      const std::string& comment = {});

}  // namespace roiadapt::svg
