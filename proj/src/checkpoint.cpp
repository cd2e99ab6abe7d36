#include "reactgen/checkpoint.hpp"

#include "reactgen/pipeline.hpp"

// Explicit instantiations at both precisions so template errors surface in
// the library build rather than in whichever test first touches a path.

namespace reactgen {

template void pipe::def_model<float>(nn::ParamStore<float>&, const Config&);
template void pipe::def_model<double>(nn::ParamStore<double>&, const Config&);

template ckpt::Meta pipe::train_stage<float>(nn::ParamStore<float>&, const Config&,
                                             const std::vector<Session>&,
                                             const std::vector<Session>&, int, long, ckpt::Meta,
                                             const pipe::TrainHooks&);
template ckpt::Meta pipe::train_stage<double>(nn::ParamStore<double>&, const Config&,
                                              const std::vector<Session>&,
                                              const std::vector<Session>&, int, long, ckpt::Meta,
                                              const pipe::TrainHooks&);

template ad::Mat<float> pipe::generate_reaction<float>(const nn::ParamStore<float>&, const Config&,
                                                       const Session&, std::uint64_t, int);
template ad::Mat<double> pipe::generate_reaction<double>(const nn::ParamStore<double>&,
                                                         const Config&, const Session&,
                                                         std::uint64_t, int);

template ad::Mat<float> pipe::generate_streaming<float>(const nn::ParamStore<float>&,
                                                        const Config&, const Session&,
                                                        std::uint64_t, int);
template ad::Mat<double> pipe::generate_streaming<double>(const nn::ParamStore<double>&,
                                                          const Config&, const Session&,
                                                          std::uint64_t, int);

template ad::Mat<float> pipe::generate_replay<float>(const nn::ParamStore<float>&, const Config&,
                                                     const Session&, std::uint64_t, int,
                                                     const ad::Mat<float>&);
template ad::Mat<double> pipe::generate_replay<double>(const nn::ParamStore<double>&, const Config&,
                                                       const Session&, std::uint64_t, int,
                                                       const ad::Mat<double>&);

template metrics::EvalReport pipe::evaluate<float>(const nn::ParamStore<float>&, const Config&,
                                                   const std::vector<Session>&,
                                                   const std::vector<Session>&, int, std::uint64_t,
                                                   int);
template metrics::EvalReport pipe::evaluate<double>(const nn::ParamStore<double>&, const Config&,
                                                    const std::vector<Session>&,
                                                    const std::vector<Session>&, int, std::uint64_t,
                                                    int);

} // namespace reactgen
