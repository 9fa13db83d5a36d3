#pragma once

#include "skron/error.hpp"
#include "skron/sym.hpp"
#include "skron/kron.hpp"
#include "skron/spectral.hpp"
#include "skron/lyapunov.hpp"
#include "skron/ode.hpp"
#include "skron/plant.hpp"
#include "skron/kleinman.hpp"
#include "skron/dataset.hpp"
#include "skron/eirl.hpp"
#include "skron/mee.hpp"
#include "skron/io.hpp"
#include "skron/study.hpp"
#include "skron/algebra_suite.hpp"
