#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evtax/common.hpp"

namespace evtax {

struct TaxonomyNode {
  CategoryId id = 0;
  std::string name;
  std::optional<CategoryId> parent;
  int level = 0;
  /// Extra names accepted by resolve(); never used for display.
  std::vector<std::string> aliases;
  /// Label shown in catalogs; empty means `name`.
  std::string display;

  const std::string& catalog_label() const {
    return display.empty() ? name : display;
  }
  friend bool operator==(const TaxonomyNode&, const TaxonomyNode&) = default;
};

/// Immutable label forest. Every node id is unique, every parent exists,
/// and names (including aliases) are unique within a level, compared
/// case-insensitively.
class Taxonomy {
 public:
  Taxonomy() = default;

  /// Validates and computes levels. Throws Error on duplicate ids,
  /// dangling parents, cycles, duplicate names within a level, or no nodes.
  static Taxonomy from_nodes(std::vector<TaxonomyNode> nodes);

  const TaxonomyNode& resolve(CategoryId id) const;
  const TaxonomyNode& resolve(std::string_view name) const;
  /// Digits are read as an id, anything else as a name.
  const TaxonomyNode& resolve_key(std::string_view key) const;

  bool contains(CategoryId id) const { return index_.contains(id); }
  CategoryId first_level_of(CategoryId id) const;
  /// Root-to-node ids, inclusive.
  std::vector<CategoryId> path(CategoryId id) const;
  std::vector<std::string> name_path(CategoryId id) const;
  bool is_within(CategoryId node, CategoryId ancestor) const;
  std::vector<CategoryId> first_level_ids() const;
  std::vector<CategoryId> children_of(CategoryId id) const;

  /// Sorted by id.
  const std::vector<TaxonomyNode>& nodes() const { return nodes_; }

 private:
  std::vector<TaxonomyNode> nodes_;
  std::map<CategoryId, std::size_t> index_;
  std::multimap<std::string, std::size_t> names_;  // lowercased
};

/// One JSON object per line: {"id": 0, "name": "music", "parent": null}
/// with optional "aliases" (array) and "display" (string). Blank lines
/// and lines starting with '#' are skipped.
Taxonomy load_taxonomy(std::string_view document);
Taxonomy load_taxonomy_file(const std::filesystem::path& path);
std::string serialize_taxonomy(const Taxonomy& taxonomy);

/// Location of the shipped seven-category file.
std::filesystem::path default_taxonomy_path();

}  // namespace evtax
