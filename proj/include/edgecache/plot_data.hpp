#pragma once

#include <filesystem>
#include <iosfwd>

namespace edgecache {

// Long-format figure data (figure,series,x,y) from a compare or sweep output
// directory. x is the window index; y is the seed-averaged window hit rate
// (figures 3, 5, 6) or mean discrepancy (figure 4).
//
// Figures 3 and 4 read compare output, 5 a PxQ sweep and 6 an FxB sweep.
// Throws ConfigError when the directory holds the wrong kind of results.
void emit_plot_data(const std::filesystem::path& results_dir, int figure, std::ostream& out);

}  // namespace edgecache
