#include <hpdg/vtk.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hpdg {

void writeLegacyVtk(const std::string &path, const HierarchicalMesh &mesh,
                    const std::vector<std::pair<std::string, std::vector<double>>> &cellData)
{
  const auto &leaves = mesh.leafElements();
  const int cells = static_cast<int>(leaves.size());
  for (const auto &[name, values] : cellData)
    if (static_cast<int>(values.size()) != cells)
      throw std::invalid_argument("cell data '" + name + "' does not match the leaf count");

  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open '" + path + "' for writing");

  const int cornersPerCell = mesh.cellType() == CellType::Quad ? 4 : 3;
  const int vtkCellType = mesh.cellType() == CellType::Quad ? 9 : 5;

  out << "# vtk DataFile Version 3.0\n";
  out << "hpdg leaf mesh\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";

  char buffer[64];
  out << "POINTS " << cells * cornersPerCell << " double\n";
  for (const Element &e : leaves)
    for (int c = 0; c < cornersPerCell; ++c) {
      std::snprintf(buffer, sizeof(buffer), "%.12g %.12g 0\n", e.corners[c].x, e.corners[c].y);
      out << buffer;
    }

  out << "CELLS " << cells << " " << cells * (cornersPerCell + 1) << "\n";
  for (int i = 0; i < cells; ++i) {
    out << cornersPerCell;
    for (int c = 0; c < cornersPerCell; ++c)
      out << " " << i * cornersPerCell + c;
    out << "\n";
  }

  out << "CELL_TYPES " << cells << "\n";
  for (int i = 0; i < cells; ++i)
    out << vtkCellType << "\n";

  if (!cellData.empty()) {
    out << "CELL_DATA " << cells << "\n";
    for (const auto &[name, values] : cellData) {
      out << "SCALARS " << name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (const double v : values) {
        std::snprintf(buffer, sizeof(buffer), "%.12g\n", v);
        out << buffer;
      }
    }
  }
}

} // namespace hpdg
