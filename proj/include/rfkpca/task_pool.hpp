#pragma once

#include <cstddef>
#include <functional>

namespace rfkpca {

/// 0 means "auto" (hardware concurrency, at least 1).
unsigned resolve_threads(unsigned requested) noexcept;

/// Runs fn(0..count-1) on up to `threads` workers. Tasks must write only to
/// their own result slot; the exception of the lowest failing index is
/// rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace rfkpca
