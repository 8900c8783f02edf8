#ifndef HPDG_VTK_HPP
#define HPDG_VTK_HPP

#include <string>
#include <utility>
#include <vector>

#include <hpdg/mesh.hpp>

namespace hpdg {

// Writes the leaf mesh as a legacy ASCII UNSTRUCTURED_GRID file with one
// SCALARS array per named cell-data vector (ordered like leafElements()).
void writeLegacyVtk(const std::string &path, const HierarchicalMesh &mesh,
                    const std::vector<std::pair<std::string, std::vector<double>>> &cellData);

} // namespace hpdg

#endif // HPDG_VTK_HPP
