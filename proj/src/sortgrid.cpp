#include "gridsight/sortgrid.hpp"

namespace gridsight {

GridLayout GridLayout::scanline(int count, int columns) {
    if (columns < 1) throw std::invalid_argument("columns must be >= 1");
    GridLayout layout;
    layout.columns = columns;
    layout.count = std::max(0, count);
    layout.rows = grid_rows(layout.count, columns);
    layout.cells.assign(static_cast<std::size_t>(layout.rows) * columns, kEmpty);
    for (int i = 0; i < layout.count; ++i) layout.cells[static_cast<std::size_t>(i)] = i;
    return layout;
}

bool GridLayout::satisfies_invariants() const {
    if (columns < 1 || count < 0 || rows != grid_rows(count, columns)) return false;
    if (cells.size() != static_cast<std::size_t>(rows) * columns) return false;
    std::vector<char> seen(static_cast<std::size_t>(count), 0);
    for (std::size_t s = 0; s < cells.size(); ++s) {
        const int item = cells[s];
        if (static_cast<int>(s) >= count) {
            if (item != kEmpty) return false;
            continue;
        }
        if (item < 0 || item >= count || seen[static_cast<std::size_t>(item)]) return false;
        seen[static_cast<std::size_t>(item)] = 1;
    }
    return true;
}

std::vector<GridPos> valid_shape(int count, int columns) {
    std::vector<GridPos> out;
    out.reserve(static_cast<std::size_t>(std::max(0, count)));
    for (int s = 0; s < count; ++s) out.push_back({s / columns, s % columns});
    return out;
}

GridPos clamp_to_shape(GridPos position, int count, int columns) {
    const int rows = grid_rows(count, columns);
    GridPos p{std::clamp(position.row, 0, rows - 1), std::clamp(position.col, 0, columns - 1)};
    if (p.row == rows - 1) {
        const int last_columns = count - (rows - 1) * columns;
        p.col = std::min(p.col, last_columns - 1);
    }
    return p;
}

}  // namespace gridsight
