#ifndef PLASTHOM_PLASTHOM_HPP
#define PLASTHOM_PLASTHOM_HPP

#include "plasthom/cell.hpp"
#include "plasthom/energy.hpp"
#include "plasthom/errors.hpp"
#include "plasthom/finsler.hpp"
#include "plasthom/gamma.hpp"
#include "plasthom/gluing.hpp"
#include "plasthom/grid.hpp"
#include "plasthom/io.hpp"
#include "plasthom/lbfgs.hpp"
#include "plasthom/log.hpp"
#include "plasthom/mat3.hpp"
#include "plasthom/materials.hpp"
#include "plasthom/reduce.hpp"
#include "plasthom/rng.hpp"
#include "plasthom/version.hpp"

#endif
