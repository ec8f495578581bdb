#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>

namespace eam {

// Integer handle tagged by what it indexes, so box ids, term refs and code
// addresses can't be mixed up.
template <typename Tag>
struct StrongId {
  std::uint32_t value = 0;

  constexpr StrongId() = default;
  constexpr explicit StrongId(std::uint32_t v) : value(v) {}
  constexpr explicit StrongId(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr auto operator<=>(const StrongId&) const = default;
  constexpr std::size_t index() const { return value; }

  friend std::ostream& operator<<(std::ostream& os, StrongId id) { return os << id.value; }
};

struct CodeAddressTag {};
struct TermRefTag {};
struct NodeIdTag {};
struct SuspIdTag {};

using CodeAddress = StrongId<CodeAddressTag>;
using TermRef = StrongId<TermRefTag>;
// AND-boxes and OR-boxes draw ids from one counter; the arena slot says which kind it is.
using NodeId = StrongId<NodeIdTag>;
using AndId = NodeId;
using OrId = NodeId;
using SuspId = StrongId<SuspIdTag>;

}  // namespace eam

template <typename Tag>
struct std::hash<eam::StrongId<Tag>> {
  std::size_t operator()(eam::StrongId<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
