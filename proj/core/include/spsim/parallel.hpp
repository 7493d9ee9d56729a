#pragma once

#include <cstddef>
#include <functional>

namespace spsim {

/// Runs body(block) for every block in [0, n_blocks) on up to `threads`
/// workers (0 = hardware concurrency). Blocks must not share mutable state.
void parallel_for_blocks(std::size_t n_blocks, unsigned threads,
                         const std::function<void(std::size_t)>& body);

unsigned resolve_threads(unsigned requested);

}  // namespace spsim
