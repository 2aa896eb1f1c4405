"""Entry point for running sunnpest as a module."""


def run() -> None:
    """Run the sunnpest CLI."""
    from sunnpest import cli

    cli.main()


if __name__ == '__main__':
    run()
