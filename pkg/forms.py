"""WTForms validation of scenario documents and API request bodies

Documents arrive as parsed JSON, so forms are fed with ``data=`` instead of form
data. Range rules live here; cross-field rules (power sums, strategy/pool
consistency) live in the domain constructors.
"""
from wtforms import BooleanField, FieldList, FloatField, Form, FormField, IntegerField, StringField
from wtforms.validators import AnyOf, Length, NumberRange, StopValidation, ValidationError

from mining.errors import ConfigError

SEED_LIMIT = 2 ** 64 - 1


class Required:
    """Field must be present; unlike DataRequired, zero is a valid value"""

    def __init__(self, message='This field is required.'):
        self.message = message

    def __call__(self, form, field):
        if field.data is None or field.data == '':
            raise StopValidation(self.message)


class Omittable:
    """Skip the remaining validators when the key is absent"""

    def __call__(self, form, field):
        if field.data is None:
            raise StopValidation()


class Number:
    """Reject strings and booleans before range checks compare them"""

    def __init__(self, integer=False):
        self.integer = integer

    def __call__(self, form, field):
        value = field.data
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise StopValidation('Must be a number.')
        if self.integer and not float(value).is_integer():
            raise StopValidation('Must be an integer.')


class MinerForm(Form):
    """One entry of ``sim.miners``"""
    id = StringField('Miner id', validators=[Required(), Length(min=1, max=64)])
    power = FloatField('Power fraction', validators=[Required(), Number(), NumberRange(min=0, max=1)])
    strategy = StringField('Strategy', validators=[Omittable(), AnyOf(['honest', 'withhold', 'selfish'])])
    pool = StringField('Pool', validators=[Omittable(), Length(min=1, max=64)])
    target_pool = StringField('Target pool', validators=[Omittable(), Length(min=1, max=64)])
    cartel_id = StringField('Cartel', validators=[Omittable(), Length(min=1, max=64)])


class PoolForm(Form):
    """One entry of ``sim.pools``"""
    id = StringField('Pool id', validators=[Required(), Length(min=1, max=64)])
    fee_fraction = FloatField('Fee', validators=[Omittable(), Number(), NumberRange(min=0, max=1)])
    reward_scheme = StringField('Reward scheme', validators=[Omittable(), AnyOf(['proportional', 'pps'])])
    pps_rate = FloatField('PPS rate', validators=[Omittable(), Number(), NumberRange(min=0)])

    def validate_fee_fraction(self, field):
        if field.data is not None and field.data >= 1:
            raise ValidationError('Fee must be below 1.')


class SimConfigForm(Form):
    """The ``sim`` block of a scenario"""
    miners = FieldList(FormField(MinerForm), min_entries=0)
    pools = FieldList(FormField(PoolForm), min_entries=0)
    coalition = FieldList(StringField('Coalition member', validators=[Required()]), min_entries=0)
    total_blocks = IntegerField('Blocks', validators=[Required(), Number(integer=True), NumberRange(min=1)])
    gamma = FloatField('Gamma', validators=[Omittable(), Number(), NumberRange(min=0, max=1)])
    reward_per_block = FloatField('Block reward', validators=[Omittable(), Number(), NumberRange(min=0)])
    share_difficulty_ratio = IntegerField('Shares per block',
                                          validators=[Omittable(), Number(integer=True), NumberRange(min=1)])
    seed = IntegerField('Seed', validators=[Omittable(), Number(integer=True), NumberRange(min=0, max=SEED_LIMIT)])
    fork_punishment = FloatField('Fork punishment', validators=[Omittable(), Number(), NumberRange(min=0, max=1)])
    natural_fork_rate = FloatField('Natural fork rate', validators=[Omittable(), Number(), NumberRange(min=0, max=1)])
    share_noise = BooleanField('Share noise')
    difficulty = FloatField('Difficulty', validators=[Omittable(), Number(), NumberRange(min=1)])
    tx_fees = FloatField('Transaction fees', validators=[Omittable(), Number(), NumberRange(min=0)])

    def validate_miners(self, field):
        if not field.entries:
            raise ValidationError('At least one miner is required.')

    def validate_natural_fork_rate(self, field):
        if field.data is not None and field.data >= 1:
            raise ValidationError('Natural fork rate must be below 1.')


class AttackForm(Form):
    """The ``attack`` block of a scenario"""
    family = StringField('Family', validators=[Required(), AnyOf(['withholding', 'selfish'])])
    alpha = FloatField('Alpha', validators=[Required(), Number(), NumberRange(min=0, max=1)])
    beta = FloatField('Beta', validators=[Omittable(), Number(), NumberRange(min=0, max=1)])
    gamma = FloatField('Gamma', validators=[Omittable(), Number(), NumberRange(min=0, max=1)])
    fork_punishment = FloatField('Fork punishment', validators=[Omittable(), Number(), NumberRange(min=0, max=1)])
    honest_miners = IntegerField('Honest miners', validators=[Omittable(), Number(integer=True), NumberRange(min=1)])
    honest_per_pool = IntegerField('Honest miners per pool',
                                   validators=[Omittable(), Number(integer=True), NumberRange(min=1)])

    def validate_beta(self, field):
        if self.family.data == 'selfish' and field.data is not None:
            raise ValidationError('Beta only applies to withholding.')

    def validate_gamma(self, field):
        if self.family.data == 'withholding' and field.data is not None:
            raise ValidationError('Gamma only applies to selfish mining.')


class DetectionForm(Form):
    """The ``detection`` block of a scenario"""
    suspicious_z = FloatField('Suspicious z', validators=[Omittable(), Number(), NumberRange(min=0)])
    detected_z = FloatField('Detected z', validators=[Omittable(), Number(), NumberRange(min=0)])

    def validate_detected_z(self, field):
        low = self.suspicious_z.data
        if field.data is not None and low is not None and field.data < low:
            raise ValidationError('Detected threshold must not be below the suspicious one.')


class ScenarioForm(Form):
    """Top-level keys of a scenario document"""
    name = StringField('Name', validators=[Required(), Length(min=1, max=120)])
    replicates = IntegerField('Replicates', validators=[Omittable(), Number(integer=True), NumberRange(min=1)])
    workers = IntegerField('Workers', validators=[Omittable(), Number(integer=True), NumberRange(min=1)])
    output_dir = StringField('Output directory', validators=[Omittable(), Length(min=1, max=500)])
    seed = IntegerField('Seed', validators=[Omittable(), Number(integer=True), NumberRange(min=0, max=SEED_LIMIT)])
    total_blocks = IntegerField('Blocks', validators=[Omittable(), Number(integer=True), NumberRange(min=1)])
    reward_per_block = FloatField('Block reward', validators=[Omittable(), Number(), NumberRange(min=0)])


class ZTestForm(Form):
    """Body of ``POST /api/detection/z-test``"""
    expected = FloatField('Expected blocks', validators=[Required(), Number(), NumberRange(min=0)])
    observed = IntegerField('Observed blocks', validators=[Required(), Number(integer=True), NumberRange(min=0)])
    label = StringField('Label', validators=[Omittable(), Length(max=120)])


class FormulaArgsForm(Form):
    """Query of ``GET /api/formulas/<name>``"""
    args = FieldList(FloatField('Argument', validators=[Required(), Number()]), min_entries=0)


def first_error(errors, prefix=''):
    """(dotted field, message) of the first error in a WTForms ``errors`` structure"""
    if isinstance(errors, dict):
        for key, value in errors.items():
            found = first_error(value, f'{prefix}.{key}' if prefix else str(key))
            if found:
                return found
        return None
    if isinstance(errors, (list, tuple)):
        for i, value in enumerate(errors):
            if isinstance(value, str):
                return prefix, value
            found = first_error(value, f'{prefix}.{i}')
            if found:
                return found
    return None


def check(form, prefix=''):
    """Validate ``form`` or raise ConfigError naming the offending field"""
    if form.validate():
        return form
    field, message = first_error(form.errors, prefix) or (prefix or None, 'invalid value')
    raise ConfigError(message, field)


def _section(data, key):
    value = data.get(key)
    if value is not None and not isinstance(value, dict):
        raise ConfigError('must be a JSON object', key)
    return value


def validate_scenario(data):
    """Range-check a parsed scenario document section by section"""
    if not isinstance(data, dict):
        raise ConfigError('scenario must be a JSON object')
    check(ScenarioForm(data=data))
    sim = _section(data, 'sim')
    if sim is not None:
        for key in ('miners', 'pools', 'coalition'):
            if key in sim and not isinstance(sim[key], list):
                raise ConfigError('must be a list', f'sim.{key}')
        check(SimConfigForm(data=sim), 'sim')
    attack = _section(data, 'attack')
    if attack is not None:
        check(AttackForm(data=attack), 'attack')
    elif sim is None:
        raise ConfigError('scenario needs a sim block or an attack block', 'sim')
    detection = _section(data, 'detection')
    if detection is not None:
        check(DetectionForm(data=detection), 'detection')
    return data
