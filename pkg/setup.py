from setuptools import setup, find_packages  # type: ignore

setup(
    name="dspolariton",
    version="0.1.0",
    description="Dressed-state polariton superradiance and lasing simulator",
    packages=find_packages(exclude=["tests"]),
    include_package_data=True,
    package_data={"dspolariton": ["presets/*.yml"]},
    python_requires=">=3.8",
    install_requires=["numpy", "scipy", "pyyaml", "python-dotenv"],
    extras_require={"tests": ["pytest"]},
    entry_points={"console_scripts": ["dspolariton = dspolariton.cli:main"]},
)
