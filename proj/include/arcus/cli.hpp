#pragma once

#include <cstddef>
#include <iosfwd>

namespace arcus {

/// Entry point of the `arcus` tool (subcommands run, bench, generate).
/// Returns the process exit code; diagnostics go to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Latent width used when --latent-dim is not given: a quarter of the input
/// width, at least 1.
std::size_t default_latent_dim(std::size_t input_dim);

}  // namespace arcus
