from nethermind.labelprop.exceptions import ConfigError


def lr_at(episode: int, lr0: float = 1e-3, halve_every: int = 10_000) -> float:
    """Step schedule halving the learning rate every ``halve_every`` episodes: lr0 * 0.5 ** (episode // halve_every)"""
    if episode < 0:
        raise ConfigError(f"Episode index must be non-negative, received {episode}")
    return lr0 * 0.5 ** (episode // halve_every)
