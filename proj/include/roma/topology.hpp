#pragma once

namespace roma {

// 17 x 16 unit grid: a 1x16 vector-unit row in the center, an 8x16 matrix
// unit array above and below. Every matrix unit pairs an SRAM-backed
// H-Unit with a ROM-backed L-Unit.
struct ChipTopology {
  int grid_rows = 17;
  int grid_cols = 16;
  int vector_row = 8;  // center row

  int matrix_units() const { return (grid_rows - 1) * grid_cols; }
  int vector_units() const { return grid_cols; }
};

}  // namespace roma
