#include "evtax/taxonomy.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "evtax/jsonl.hpp"

namespace evtax {

Taxonomy Taxonomy::from_nodes(std::vector<TaxonomyNode> nodes) {
  if (nodes.empty()) throw Error("taxonomy: empty document");
  std::sort(nodes.begin(), nodes.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  Taxonomy tax;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id < 0)
      throw Error("taxonomy: negative id " + std::to_string(nodes[i].id));
    if (!tax.index_.emplace(nodes[i].id, i).second)
      throw Error("taxonomy: duplicate id " + std::to_string(nodes[i].id));
  }
  for (const auto& n : nodes) {
    if (n.parent && !tax.index_.contains(*n.parent))
      throw Error("taxonomy: node " + std::to_string(n.id) +
                  " has dangling parent " + std::to_string(*n.parent));
  }
  // Walk each ancestor chain; revisiting a node on the same chain is a cycle.
  for (auto& n : nodes) {
    std::set<CategoryId> seen{n.id};
    int level = 0;
    std::optional<CategoryId> up = n.parent;
    while (up) {
      if (!seen.insert(*up).second)
        throw Error("taxonomy: cycle through node " + std::to_string(n.id));
      ++level;
      up = nodes[tax.index_.at(*up)].parent;
    }
    n.level = level;
  }
  std::set<std::pair<int, std::string>> level_names;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::vector<std::string> keys{nodes[i].name};
    keys.insert(keys.end(), nodes[i].aliases.begin(), nodes[i].aliases.end());
    for (const auto& key : keys) {
      std::string lower = to_lower_ascii(key);
      if (lower.empty())
        throw Error("taxonomy: node " + std::to_string(nodes[i].id) +
                    " has an empty name");
      if (!level_names.emplace(nodes[i].level, lower).second)
        throw Error("taxonomy: name '" + key + "' repeated within level " +
                    std::to_string(nodes[i].level));
      tax.names_.emplace(lower, i);
    }
  }
  tax.nodes_ = std::move(nodes);
  return tax;
}

const TaxonomyNode& Taxonomy::resolve(CategoryId id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw Error("taxonomy: unknown id " + std::to_string(id));
  return nodes_[it->second];
}

const TaxonomyNode& Taxonomy::resolve(std::string_view name) const {
  auto [lo, hi] = names_.equal_range(to_lower_ascii(name));
  if (lo == hi) throw Error("taxonomy: unknown name '" + std::string(name) + "'");
  if (std::next(lo) != hi)
    throw Error("taxonomy: ambiguous name '" + std::string(name) + "'");
  return nodes_[lo->second];
}

const TaxonomyNode& Taxonomy::resolve_key(std::string_view key) const {
  bool digits = !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
  if (digits && key.size() < 10) return resolve(std::stoi(std::string(key)));
  return resolve(key);
}

CategoryId Taxonomy::first_level_of(CategoryId id) const {
  const TaxonomyNode* n = &resolve(id);
  while (n->parent) n = &nodes_[index_.at(*n->parent)];
  return n->id;
}

std::vector<CategoryId> Taxonomy::path(CategoryId id) const {
  std::vector<CategoryId> out;
  const TaxonomyNode* n = &resolve(id);
  out.push_back(n->id);
  while (n->parent) {
    n = &nodes_[index_.at(*n->parent)];
    out.push_back(n->id);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<std::string> Taxonomy::name_path(CategoryId id) const {
  std::vector<std::string> out;
  for (CategoryId p : path(id)) out.push_back(resolve(p).name);
  return out;
}

bool Taxonomy::is_within(CategoryId node, CategoryId ancestor) const {
  for (CategoryId p : path(node))
    if (p == ancestor) return true;
  return false;
}

std::vector<CategoryId> Taxonomy::first_level_ids() const {
  std::vector<CategoryId> out;
  for (const auto& n : nodes_)
    if (n.level == 0) out.push_back(n.id);
  return out;
}

std::vector<CategoryId> Taxonomy::children_of(CategoryId id) const {
  std::vector<CategoryId> out;
  for (const auto& n : nodes_)
    if (n.parent == id) out.push_back(n.id);
  return out;
}

Taxonomy load_taxonomy(std::string_view document) {
  std::vector<TaxonomyNode> nodes;
  std::istringstream in{std::string(document)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto where = "taxonomy line " + std::to_string(number) + ": ";
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw Error(where + "not a JSON object");
    if (!j.contains("id") || !j["id"].is_number_integer())
      throw Error(where + "missing integer id");
    if (!j.contains("name") || !j["name"].is_string())
      throw Error(where + "missing name");
    TaxonomyNode node;
    node.id = j["id"].get<CategoryId>();
    node.name = j["name"].get<std::string>();
    if (j.contains("parent") && !j["parent"].is_null()) {
      if (!j["parent"].is_number_integer())
        throw Error(where + "parent must be an integer or null");
      node.parent = j["parent"].get<CategoryId>();
    }
    if (j.contains("aliases"))
      node.aliases = j["aliases"].get<std::vector<std::string>>();
    if (j.contains("display")) node.display = j["display"].get<std::string>();
    nodes.push_back(std::move(node));
  }
  return Taxonomy::from_nodes(std::move(nodes));
}

Taxonomy load_taxonomy_file(const std::filesystem::path& path) {
  return load_taxonomy(read_file(path));
}

std::string serialize_taxonomy(const Taxonomy& taxonomy) {
  std::string out;
  for (const auto& n : taxonomy.nodes()) {
    Json j = Json::object();
    j["id"] = n.id;
    j["name"] = n.name;
    j["parent"] = n.parent ? Json(*n.parent) : Json(nullptr);
    if (!n.aliases.empty()) j["aliases"] = n.aliases;
    if (!n.display.empty()) j["display"] = n.display;
    out += dump_record(j);
    out += '\n';
  }
  return out;
}

std::filesystem::path default_taxonomy_path() {
  return std::filesystem::path(EVTAX_DATA_DIR) / "taxonomy.default";
}

}  // namespace evtax
