#pragma once

#include "dicpf/adapt.hpp"
#include "dicpf/common.hpp"
#include "dicpf/cpf.hpp"
#include "dicpf/diagnostics.hpp"
#include "dicpf/domain.hpp"
#include "dicpf/drivers.hpp"
#include "dicpf/init_kernels.hpp"
#include "dicpf/initial_measure.hpp"
#include "dicpf/model.hpp"
#include "dicpf/models/kalman.hpp"
#include "dicpf/models/mvn_static.hpp"
#include "dicpf/models/noisy_ar.hpp"
#include "dicpf/models/seir.hpp"
#include "dicpf/models/stochastic_volatility.hpp"
#include "dicpf/particle_system.hpp"
#include "dicpf/reversibility.hpp"
#include "dicpf/rng.hpp"
#include "dicpf/stat_tests.hpp"
#include "dicpf/trajectory.hpp"
#include "dicpf/weights.hpp"
