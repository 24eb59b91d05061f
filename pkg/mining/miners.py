"""Mining actors: hashpower share, strategy and pool membership"""
from dataclasses import dataclass
from enum import Enum

from mining.errors import ConfigError


class Strategy(str, Enum):
    """Miner strategy"""
    HONEST = 'honest'
    WITHHOLD = 'withhold'   # infiltrator: submits shares, destroys blocks
    SELFISH = 'selfish'     # member of the selfish-mining cartel


@dataclass(frozen=True)
class MinerSpec:
    """One mining actor

    ``pool=None`` means solo mining. A withholding infiltrator names its
    ``target_pool`` and must be a member of it; a selfish member names its
    ``cartel_id`` and mines in the cartel (its pool, if given, is the cartel).
    """
    id: str
    power_fraction: float
    strategy: Strategy = Strategy.HONEST
    pool: str | None = None
    target_pool: str | None = None
    cartel_id: str | None = None

    def __post_init__(self):
        field = f'miners.{self.id}'
        if not self.id:
            raise ConfigError('miner id must not be empty', 'miners.id')
        if not 0 <= self.power_fraction <= 1:
            raise ConfigError(f'power fraction must lie in [0, 1], got {self.power_fraction}',
                              f'{field}.power_fraction')
        try:
            strategy = Strategy(self.strategy)
        except ValueError:
            raise ConfigError(f'unknown strategy {self.strategy!r}', f'{field}.strategy') from None
        object.__setattr__(self, 'strategy', strategy)

        if strategy is Strategy.WITHHOLD:
            if not self.target_pool:
                raise ConfigError('withholding infiltrator needs a target_pool', f'{field}.target_pool')
            if self.pool != self.target_pool:
                raise ConfigError(f'infiltrator must mine in its target pool {self.target_pool!r}, '
                                  f'not {self.pool!r}', f'{field}.pool')
        elif strategy is Strategy.SELFISH:
            if not self.cartel_id:
                raise ConfigError('selfish member needs a cartel_id', f'{field}.cartel_id')
            if self.pool not in (None, self.cartel_id):
                raise ConfigError('selfish member can only mine in its cartel', f'{field}.pool')
        elif self.target_pool or self.cartel_id:
            raise ConfigError('honest miner cannot name a target pool or cartel', field)

    @property
    def payee(self):
        """Account credited with this miner's main-chain blocks"""
        if self.strategy is Strategy.SELFISH:
            return self.cartel_id
        return self.pool or self.id

    def to_dict(self):
        data = {'id': self.id, 'power': self.power_fraction, 'strategy': self.strategy.value}
        for key in ('pool', 'target_pool', 'cartel_id'):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(
            id=str(data['id']),
            power_fraction=float(data['power']),
            strategy=data.get('strategy', Strategy.HONEST.value),
            pool=data.get('pool') or None,
            target_pool=data.get('target_pool') or None,
            cartel_id=data.get('cartel_id') or None,
        )
