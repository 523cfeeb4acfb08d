#pragma once

#include "fapre/capacity.hpp"
#include "fapre/constellation.hpp"
#include "fapre/dataset.hpp"
#include "fapre/error.hpp"
#include "fapre/format.hpp"
#include "fapre/linalg.hpp"
#include "fapre/mimo.hpp"
#include "fapre/neural.hpp"
#include "fapre/precoder_opt.hpp"
#include "fapre/random.hpp"
