#pragma once

#include "ddsynth/trace.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ddsynth {

struct NamedColor {
  std::string name;
  std::array<std::uint8_t, 3> rgb;
};

/// Named palette sorted ascending by (r, g, b).
class ColorTable {
 public:
  explicit ColorTable(std::vector<NamedColor> entries);

  /// Loads `name,r,g,b` CSV. A leading `# fnv1a64 <hex>` line, when present, must match the body.
  static ColorTable load(const std::filesystem::path& path);
  static ColorTable parse(const std::string& text);

  std::size_t size() const { return entries_.size(); }
  const NamedColor& operator[](std::size_t i) const { return entries_.at(i); }
  const std::vector<NamedColor>& entries() const { return entries_; }
  bool contains(std::string_view name) const;

 private:
  std::vector<NamedColor> entries_;
};

/// IPv4 /24 network.
struct Subnet24 {
  std::uint32_t network = 0;

  static Subnet24 of(std::uint32_t address) { return {address & 0xffffff00u}; }
  static Subnet24 parse(std::string_view text);  // "a.b.c.0/24"
  std::string str() const;
  friend auto operator<=>(const Subnet24&, const Subnet24&) = default;
};

/// Closest palette entry to the prefix's first three octets read as RGB; ties keep table order.
const NamedColor& map_subnet(Subnet24 subnet, const ColorTable& table);

/// Evenly spaced pick: entry floor(j * len(table) / category_count).
const NamedColor& map_category(std::size_t j, std::size_t category_count, const ColorTable& table);

enum class View : std::uint8_t { Protocol = 0, Subnet = 1, AttackType = 2 };
inline constexpr View kViews[] = {View::Protocol, View::Subnet, View::AttackType};
std::string_view to_string(View v);
View view_from_string(std::string_view name);

struct PromptTemplates {
  std::string global = "network traffic image";
  std::array<std::string, 3> views = {"protocol is {color} style", "subnet is {color} style",
                                      "attack type is {color} style"};

  /// Parses `{"global": ..., "templates": {"protocol": ..., "subnet": ..., "attack_type": ...}}`.
  static PromptTemplates from_json(const std::string& text);
  std::string to_json() const;
};

class ViewCatalog {
 public:
  ViewCatalog(std::array<std::vector<std::string>, 3> categories, PromptTemplates templates);

  /// Protocol view: TCP, UDP, ICMP. Subnet view: destination /24s present. Attack view: labels.
  static ViewCatalog from_dataset(const TraceDataset& dataset, PromptTemplates templates = {});

  const std::vector<std::string>& categories(View v) const { return categories_[static_cast<std::size_t>(v)]; }
  std::size_t index_of(View v, std::string_view category) const;
  const PromptTemplates& templates() const { return templates_; }

 private:
  std::array<std::vector<std::string>, 3> categories_;
  PromptTemplates templates_;
};

/// Color name for category j of a view: nearest color for subnets, evenly spaced pick otherwise.
const NamedColor& category_color(View view, std::size_t j, const ViewCatalog& catalog, const ColorTable& table);

enum class PromptPhase : std::uint8_t { Train, Generate };
std::string_view to_string(PromptPhase p);

struct CategoryRef {
  View view;
  std::size_t index;
};

struct PromptSpec {
  std::string text;
  PromptPhase phase;
  std::vector<std::pair<View, std::string>> categories;  // in view order
};

PromptSpec training_prompt(View view, std::size_t j, const ViewCatalog& catalog, const ColorTable& table);
PromptSpec generation_prompt(std::vector<CategoryRef> selection, const ViewCatalog& catalog, const ColorTable& table);

}  // namespace ddsynth
