"""Frozen outputs of tests/oracles/generate.py (do not edit by hand)."""

E00_K1 = [0.1193662073189215, 0.05066059182116889, 0.039788735772973836, 0.05066059182116889, 0.1193662073189215]
E00_K3 = [0.1193662073189215, 0.01688686394038963, 0.039788735772973836, 0.01688686394038963, 0.1193662073189215]
E00_K2 = [0.1193662073189215, 0.0, 0.039788735772973836, 0.0, 0.1193662073189215]
BUMPS_EVEN_K1 = [0.04034864166714892, 0.0, 0.0384040934245094, 0.0, 0.04495706531157271]
BUMPS_SKEW_K1 = [0.039339925625470194, 0.00095946989941004, 0.03744399108889667, 0.001012505266428138, 0.04383313867878339]
CONST2_K2 = [0.954929658551372, 0.0, 0.3183098861837907, 0.0, 0.954929658551372]
POLY_K1 = [0.7008470998798789, 0.0, 0.2667729797707712, 0.0, 0.8600020429717743]
TAU = [(1.0, 1.0, 1e-12, 6.2831853071748744), (1.0, 1.0, 0.5, 5.061657010791737), (-1.0, 1.0, 1.0, 5.648750283918227), (0.0, 2.0, 0.5, 5.244115108584239), (3.9, 1.0, 0.1, 3.1661477523483486)]
E00_LAM39_ROOT1 = (0.3766745688776943, 0.7893282895954122)
E00_LAM39_ROOT3 = (1.299461418810372, -2.4184473013408527)
PI = 3.141592653589793
