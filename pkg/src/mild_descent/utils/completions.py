"""Shell completion generators."""

from __future__ import annotations

COMMANDS = {
    "reproduce": "Run the reaction-diffusion benchmark",
    "descend": "Run the descent with a custom config",
    "verify": "Run the numerical self-checks",
    "increment": "Exact cost increment between two control files",
    "example-config": "Print or write an example config",
    "completions": "Generate shell completions",
}

FLAGS = "-h --help -c --config -o --output-dir --iters -q --quiet -j --json --init-control --draws --thorough --scheme --epsilon --direct --output"


def generate_completions(shell: str) -> str:
    """Generate shell completions for the given shell."""
    if shell == "bash":
        return generate_bash_completions()
    elif shell == "zsh":
        return generate_zsh_completions()
    elif shell == "fish":
        return generate_fish_completions()
    else:
        return f"# Unknown shell: {shell}"


def generate_bash_completions() -> str:
    """Generate bash completions."""
    return f'''# mild-descent bash completions
# Add to ~/.bashrc: eval "$(mild-descent completions bash)"

_mild_descent_completions() {{
    local cur prev
    COMPREPLY=()
    cur="${{COMP_WORDS[COMP_CWORD]}}"
    prev="${{COMP_WORDS[COMP_CWORD-1]}}"

    case "${{prev}}" in
        mild-descent)
            COMPREPLY=( $(compgen -W "{' '.join(COMMANDS)}" -- ${{cur}}) )
            return 0
            ;;
        completions)
            COMPREPLY=( $(compgen -W "bash zsh fish" -- ${{cur}}) )
            return 0
            ;;
        --scheme)
            COMPREPLY=( $(compgen -W "forward central" -- ${{cur}}) )
            return 0
            ;;
        -c|--config|--init-control|-o|--output-dir|--output|increment)
            COMPREPLY=( $(compgen -f -- ${{cur}}) )
            return 0
            ;;
    esac

    case "${{cur}}" in
        -*)
            COMPREPLY=( $(compgen -W "{FLAGS}" -- ${{cur}}) )
            return 0
            ;;
    esac
    COMPREPLY=( $(compgen -f -- ${{cur}}) )
}}

complete -F _mild_descent_completions mild-descent
'''


def generate_zsh_completions() -> str:
    """Generate zsh completions."""
    described = "\n".join(f"        '{name}:{text}'" for name, text in COMMANDS.items())
    return f'''#compdef mild-descent
# mild-descent zsh completions
# Add to ~/.zshrc: eval "$(mild-descent completions zsh)"

_mild_descent() {{
    local -a commands
    commands=(
{described}
    )

    _arguments -C \\
        '1: :->command' \\
        '*: :->args'

    case $state in
        command)
            _describe 'command' commands
            ;;
        args)
            case $words[2] in
                completions)
                    _values 'shell' bash zsh fish
                    ;;
                *)
                    _files
                    ;;
            esac
            ;;
    esac
}}

compdef _mild_descent mild-descent
'''


def generate_fish_completions() -> str:
    """Generate fish completions."""
    lines = [
        "# mild-descent fish completions",
        "# Add to ~/.config/fish/completions/mild-descent.fish",
        "",
    ]
    for name, text in COMMANDS.items():
        lines.append(f'complete -c mild-descent -n "__fish_use_subcommand" -a "{name}" -d "{text}"')
    lines += [
        "",
        'complete -c mild-descent -n "__fish_seen_subcommand_from completions" -f -a "bash zsh fish"',
        'complete -c mild-descent -s c -l config -r -d "Config file (TOML)"',
        'complete -c mild-descent -s o -l output-dir -r -d "Artifact directory"',
        'complete -c mild-descent -l iters -x -d "Override outer iterations"',
        'complete -c mild-descent -s q -l quiet -d "Only warnings on stderr"',
        'complete -c mild-descent -s j -l json -d "Output in JSON format"',
        'complete -c mild-descent -n "__fish_seen_subcommand_from descend" -l init-control -r -d "Warm-start control CSV"',
        'complete -c mild-descent -n "__fish_seen_subcommand_from verify" -l draws -x -d "Random draws per check"',
        'complete -c mild-descent -n "__fish_seen_subcommand_from verify" -l thorough -d "Include benchmark descents"',
        'complete -c mild-descent -n "__fish_seen_subcommand_from increment" -l scheme -x -a "forward central" -d "Probe scheme"',
        'complete -c mild-descent -n "__fish_seen_subcommand_from increment" -l epsilon -x -d "Probe step"',
        'complete -c mild-descent -n "__fish_seen_subcommand_from increment" -l direct -d "Also print the direct difference"',
        'complete -c mild-descent -n "__fish_seen_subcommand_from example-config" -l output -r -d "Write to file"',
    ]
    return "\n".join(lines) + "\n"
