"""Second-order linear ODE operators, their addition, a named catalog and numeric solutions."""

from .catalog import (
    BESSEL_ROWS,
    BESSEL_WINDOW,
    DERIVATION_ROWS,
    FREE_WINDOW,
    LEGENDRE_WINDOW,
    BesselRow,
    CatalogEntry,
    DerivationRow,
    Registry,
    RegistryError,
    UnknownEquationError,
    catalog_get,
    default_registry,
    derive_row,
    entry_from_json,
    entry_to_json,
    row_for,
    bessel_table_operators,
)
from .operator import (
    EmptyWindowError,
    IncompatibleParamsError,
    OdeOperator,
    OperatorError,
    bessel_form,
    general_bessel,
    ode_residual,
    operators_equivalent,
    semigroup_add,
)
from .trajectory import IntegrationError, Trajectory, integrate, integrate_across
