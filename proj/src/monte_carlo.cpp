#include <exception>

#include "rfmag/protocol.hpp"

namespace rfmag {

ShotEnsemble monte_carlo(const CompiledProtocol& protocol, std::size_t n_shots,
                         std::uint64_t master_seed, int workers, std::uint64_t stream) {
  ShotEnsemble out;
  out.master_seed = master_seed;
  out.stream = stream;
  out.records.resize(n_shots);
  std::exception_ptr failure;
  const auto n = static_cast<long long>(n_shots);

#pragma omp parallel for num_threads(workers > 0 ? workers : 1) schedule(dynamic, 64)
  for (long long i = 0; i < n; ++i) {
    try {
      Rng rng = shot_rng(master_seed, static_cast<std::uint64_t>(i), stream);
      out.records[static_cast<std::size_t>(i)] = protocol.run(rng);
    } catch (...) {
#pragma omp critical(rfmag_mc_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

ShotEnsemble monte_carlo_serial(const CompiledProtocol& protocol, std::size_t n_shots,
                                std::uint64_t master_seed, std::uint64_t stream) {
  ShotEnsemble out;
  out.master_seed = master_seed;
  out.stream = stream;
  out.records.reserve(n_shots);
  for (std::size_t i = 0; i < n_shots; ++i) {
    Rng rng = shot_rng(master_seed, i, stream);
    out.records.push_back(protocol.run(rng));
  }
  return out;
}

}  // namespace rfmag
