#pragma once

#include <stdexcept>
#include <string>

namespace oscnet {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/op shape disagreements; message carries both shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Bad runtime values: out-of-range labels, empty batches, wrong neuron kind.
struct InvalidInputError : Error {
    using Error::Error;
};

// Bad configuration values: p >= 1, unknown mapping kind, epochs == 0.
struct InvalidParamError : Error {
    using Error::Error;
};

// Corrupt or mismatched files (checkpoints, IDX, CIFAR binaries).
struct FormatError : Error {
    using Error::Error;
};

// Network spec fails static shape checking.
struct SpecError : Error {
    using Error::Error;
};

struct TrainingDivergedError : Error {
    using Error::Error;
};

struct FitFailedError : Error {
    using Error::Error;
};

} // namespace oscnet
