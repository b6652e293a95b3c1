"""
Exception hierarchy shared by the simulator and the algorithms built on it
"""


class MpcError(Exception):
    """Base class for every error raised by the simulator stack"""


class InputError(MpcError, ValueError):
    """Invalid input: bad vertex id, degree bound violated, bad parameters"""


class CapacityError(InputError):
    """Records do not fit into the total space M*S"""


class BudgetExceeded(InputError):
    """An exact oracle was asked for more than its budget allows"""


class IncompletenessError(MpcError):
    """A neighborhood combine is missing an extension"""


class ContractViolation(MpcError):
    """A local algorithm broke its declared contract"""


class SpaceExceeded(MpcError):
    """A machine went over S words on storage, outbox or inbox"""

    def __init__(self, machine: int, which_limit: str, words: int, S: int):
        self.machine = machine
        self.which_limit = which_limit
        self.words = words
        self.S = S
        super().__init__(
            f"Machine {machine} exceeded its {which_limit} limit: {words} words > S={S}"
        )
